//! The interaction energy: repulsive within each species, attractive
//! across, all through the Morse kernel.
//!
//! Three evaluation routes are provided and cross-checked in tests:
//! full double sums on atoms, exact cell-pair double integrals on
//! piecewise-constant densities, and a linear-time scan evaluation on
//! particle states used inside hot loops.

use crate::error::{Error, Result};
use crate::kernel::{w, w_prime};
use crate::state::{PiecewiseDensity, SpeciesConfig, SystemState};
use crate::sweep::{SegmentFactors, Sweep};
use crate::util::{merge_sorted, neumaier_sum};

/// The energy split into its three terms: total = self_rho + self_eta - cross.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBreakdown {
    pub self_rho: f64,
    pub self_eta: f64,
    pub cross: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn assemble(self_rho: f64, self_eta: f64, cross: f64) -> Self {
        EnergyBreakdown {
            self_rho,
            self_eta,
            cross,
            total: self_rho + self_eta - cross,
        }
    }
}

/// Energy of two atomic measures with a uniform mass per atom. The double
/// sums include the diagonal (a constant per species), so equal atom sets
/// give exactly zero total.
pub fn energy_atoms(rho: &[f64], eta: &[f64], mass: f64) -> Result<EnergyBreakdown> {
    if rho.is_empty() || eta.is_empty() {
        return Err(Error::InvalidAtoms("empty position list".into()));
    }
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::InvalidAtoms(format!("mass {mass} must be positive")));
    }
    let m2 = mass * mass;
    let pair_sum = |a: &[f64], b: &[f64]| -> f64 {
        neumaier_sum(a.iter().flat_map(|&x| b.iter().map(move |&y| w(x - y))))
    };
    let self_rho = 0.5 * m2 * pair_sum(rho, rho);
    let self_eta = 0.5 * m2 * pair_sum(eta, eta);
    let cross = m2 * pair_sum(rho, eta);
    Ok(EnergyBreakdown::assemble(self_rho, self_eta, cross))
}

/// Minimal subdifferential of the energy at an atomic pair: at each atom,
/// the same-species kernel-derivative sum excluding the diagonal minus the
/// cross-species sum. The gradient-flow velocity is the negation.
pub fn subdifferential_atoms(
    rho: &[f64],
    eta: &[f64],
    mass: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if rho.is_empty() || eta.is_empty() {
        return Err(Error::InvalidAtoms("empty position list".into()));
    }
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::InvalidAtoms(format!("mass {mass} must be positive")));
    }
    check_distinct(rho)?;
    check_distinct(eta)?;
    let field = |same: &[f64], other: &[f64], at: f64| -> f64 {
        // W'(0) = 0 makes the diagonal term vanish on its own; coincident
        // cross-species atoms are likewise harmless.
        let s = neumaier_sum(same.iter().map(|&z| w_prime(at - z)));
        let c = neumaier_sum(other.iter().map(|&z| w_prime(at - z)));
        mass * (s - c)
    };
    let out_rho = rho.iter().map(|&x| field(rho, eta, x)).collect();
    let out_eta = eta.iter().map(|&y| field(eta, rho, y)).collect();
    Ok((out_rho, out_eta))
}

fn check_distinct(pos: &[f64]) -> Result<()> {
    let mut idx: Vec<usize> = (0..pos.len()).collect();
    idx.sort_by(|&a, &b| pos[a].partial_cmp(&pos[b]).unwrap());
    for k in 1..idx.len() {
        if pos[idx[k]] == pos[idx[k - 1]] {
            return Err(Error::CoincidentAtoms {
                i: idx[k - 1],
                j: idx[k],
            });
        }
    }
    Ok(())
}

/// Energy of two piecewise-constant densities via exact double integrals of
/// the kernel over every cell pair.
pub fn energy_density(f: &PiecewiseDensity, g: &PiecewiseDensity) -> EnergyBreakdown {
    let self_f = 0.5 * pair_integral_sum(f, f);
    let self_g = 0.5 * pair_integral_sum(g, g);
    let cross = pair_integral_sum(f, g);
    EnergyBreakdown::assemble(self_f, self_g, cross)
}

fn pair_integral_sum(f: &PiecewiseDensity, g: &PiecewiseDensity) -> f64 {
    let fb = f.breakpoints();
    let gb = g.breakpoints();
    neumaier_sum((0..f.num_cells()).flat_map(|k| {
        let hf = f.heights()[k];
        let ck = (fb[k], fb[k + 1]);
        (0..g.num_cells()).map(move |l| hf * g.heights()[l] * w_cell_pair(ck, (gb[l], gb[l + 1])))
    }))
}

/// Integral of W(x - y) over [a,b] x [c,d], exact for any overlap pattern.
pub(crate) fn w_cell_pair(i1: (f64, f64), i2: (f64, f64)) -> f64 {
    let (a, b) = i1;
    let (c, d) = i2;
    if b <= c {
        disjoint_pair(c - b, b - a, d - c)
    } else if d <= a {
        disjoint_pair(a - d, d - c, b - a)
    } else {
        // overlapping: split both by the sorted endpoints; every piece pair
        // is then identical or disjoint
        let mut s = [a, b, c, d];
        s.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut total = 0.0;
        for p in s.windows(2).filter(|p| p[0] >= a && p[1] <= b && p[0] < p[1]) {
            for q in s.windows(2).filter(|q| q[0] >= c && q[1] <= d && q[0] < q[1]) {
                total += if p[0] == q[0] && p[1] == q[1] {
                    self_pair(p[1] - p[0])
                } else if p[1] <= q[0] {
                    disjoint_pair(q[0] - p[1], p[1] - p[0], q[1] - q[0])
                } else {
                    disjoint_pair(p[0] - q[1], q[1] - q[0], p[1] - p[0])
                };
            }
        }
        total
    }
}

/// Integral of W over [u, u+len1] x [v, v+len2] with gap = v - (u+len1) >= 0.
#[inline]
fn disjoint_pair(gap: f64, len1: f64, len2: f64) -> f64 {
    0.5 * (-gap).exp() * f64::exp_m1(-len1) * f64::exp_m1(-len2)
}

/// Integral of W over [u, u+d]^2.
#[inline]
fn self_pair(d: f64) -> f64 {
    d + f64::exp_m1(-d)
}

/// Linear-time energy of a particle state through the scan accumulators.
/// Agrees with `energy_density` of the reconstructions to machine precision
/// and is what the simulation diagnostics use.
pub fn energy_state(state: &SystemState) -> EnergyBreakdown {
    let geom = StateGeometry::new(state);
    let segs = geom.nodes.len() - 1;
    let mut rho_terms = Vec::with_capacity(segs);
    let mut eta_terms = Vec::with_capacity(segs);
    let mut cross_terms = Vec::with_capacity(segs);
    for i in 0..segs {
        let delta = geom.nodes[i + 1] - geom.nodes[i];
        let hr = geom.rho_sweep.seg_height(i);
        let he = geom.eta_sweep.seg_height(i);
        let zr = geom.rho_sweep.w_integral_seg(i, delta);
        let ze = geom.eta_sweep.w_integral_seg(i, delta);
        rho_terms.push(0.5 * hr * zr);
        eta_terms.push(0.5 * he * ze);
        cross_terms.push(hr * ze);
    }
    EnergyBreakdown::assemble(
        neumaier_sum(rho_terms),
        neumaier_sum(eta_terms),
        neumaier_sum(cross_terms),
    )
}

/// Shared geometry for scan-based evaluations on a state: merged node list
/// and one sweep per species.
pub(crate) struct StateGeometry {
    pub nodes: Vec<f64>,
    /// node index of each rho particle
    pub rho_nodes: Vec<usize>,
    pub eta_nodes: Vec<usize>,
    pub rho_sweep: Sweep,
    pub eta_sweep: Sweep,
}

impl StateGeometry {
    pub fn new(state: &SystemState) -> Self {
        let x = state.rho().positions();
        let y = state.eta().positions();
        let (nodes, rho_nodes, eta_nodes) = merge_sorted(x, y);
        let n = state.n() as f64;
        let gap_heights = |p: &[f64]| -> Vec<f64> {
            p.windows(2).map(|w| 1.0 / (n * (w[1] - w[0]))).collect()
        };
        let factors = SegmentFactors::new(&nodes);
        let rho_sweep = Sweep::new(x, &gap_heights(x), &nodes, &factors);
        let eta_sweep = Sweep::new(y, &gap_heights(y), &nodes, &factors);
        StateGeometry {
            nodes,
            rho_nodes,
            eta_nodes,
            rho_sweep,
            eta_sweep,
        }
    }
}

/// Gradient of the density energy with respect to every marker position,
/// holding the gap masses at 1/N. Used by the JKO inner solver; verified
/// against central finite differences of `energy_density` in tests.
pub fn energy_position_gradient(state: &SystemState) -> (Vec<f64>, Vec<f64>) {
    let geom = StateGeometry::new(state);
    let grad_rho = species_gradient(
        state.rho(),
        &geom.rho_nodes,
        &geom.nodes,
        &geom.rho_sweep,
        &geom.eta_sweep,
    );
    let grad_eta = species_gradient(
        state.eta(),
        &geom.eta_nodes,
        &geom.nodes,
        &geom.eta_sweep,
        &geom.rho_sweep,
    );
    (grad_rho, grad_eta)
}

/// d/dx_m of [ H(own) - B(own, other) ] for one species.
///
/// With h_k = 1/(N d_k), U_k the integral of W*own over cell k and V_k the
/// integral of W*other over cell k:
///
///   d/dx_m = -(h_{m-1}/d_{m-1}) (U - V)_{m-1} + (h_m/d_m) (U - V)_m
///            + (h_{m-1} - h_m) (W*own - W*other)(x_m),
///
/// boundary terms dropped at m = 0 and m = N.
fn species_gradient(
    cfg: &SpeciesConfig,
    own_nodes: &[usize],
    nodes: &[f64],
    own_sweep: &Sweep,
    other_sweep: &Sweep,
) -> Vec<f64> {
    let n = cfg.n();
    let nf = n as f64;
    // per-cell integrals of (W*own - W*other) over the species' own cells
    let mut cell_diff = vec![0.0; n];
    let mut cell = 0usize;
    for i in 0..nodes.len() - 1 {
        while cell < n && own_nodes[cell + 1] <= i {
            cell += 1;
        }
        if cell < n && own_nodes[cell] <= i && i + 1 <= own_nodes[cell + 1] {
            let delta = nodes[i + 1] - nodes[i];
            cell_diff[cell] +=
                own_sweep.w_integral_seg(i, delta) - other_sweep.w_integral_seg(i, delta);
        }
    }
    (0..=n)
        .map(|m| {
            let mut g = 0.0;
            let point_diff = own_sweep.w_at(own_nodes[m]) - other_sweep.w_at(own_nodes[m]);
            if m > 0 {
                let d = cfg.gap(m - 1);
                let h = 1.0 / (nf * d);
                g += -(h / d) * cell_diff[m - 1] + h * point_diff;
            }
            if m < n {
                let d = cfg.gap(m);
                let h = 1.0 / (nf * d);
                g += (h / d) * cell_diff[m] - h * point_diff;
            }
            g
        })
        .collect()
}
