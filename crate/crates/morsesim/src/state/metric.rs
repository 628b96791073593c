//! 2-Wasserstein distances between 1-D measures.
//!
//! In one dimension W2 is the L^2 distance between quantile functions. The
//! quantile of a piecewise-constant density is piecewise linear in mass, so
//! the squared distance is a closed-form sum of quadratics over a merged
//! mass grid: no optimization, no discretization error.

use crate::error::{Error, Result};
use crate::util::neumaier_sum;

use super::{PiecewiseDensity, SpeciesConfig, SystemState};

/// Exact W2 between two piecewise-constant probability densities.
pub fn w2_density(f: &PiecewiseDensity, g: &PiecewiseDensity) -> f64 {
    let cf = f.cumulative_masses();
    let cg = g.cumulative_masses();
    let qf = Quantile::new(f.breakpoints(), &cf);
    let qg = Quantile::new(g.breakpoints(), &cg);

    // merged mass grid
    let mut masses: Vec<f64> = Vec::with_capacity(cf.len() + cg.len());
    let (mut i, mut j) = (0, 0);
    while i < cf.len() || j < cg.len() {
        let m = match (cf.get(i), cg.get(j)) {
            (Some(&a), Some(&b)) => {
                if a <= b {
                    i += 1;
                    if a == b {
                        j += 1;
                    }
                    a
                } else {
                    j += 1;
                    b
                }
            }
            (Some(&a), None) => {
                i += 1;
                a
            }
            (None, Some(&b)) => {
                j += 1;
                b
            }
            (None, None) => unreachable!(),
        };
        if masses.last() != Some(&m) {
            masses.push(m);
        }
    }

    let sq = neumaier_sum(masses.windows(2).filter(|w| w[1] > w[0]).map(|w| {
        let (u, v) = (w[0], w[1]);
        let a = qf.at(u, v, u) - qg.at(u, v, u);
        let b = qf.at(u, v, v) - qg.at(u, v, v);
        (v - u) * (a * a + a * b + b * b) / 3.0
    }));
    sq.max(0.0).sqrt()
}

/// Quantile of a piecewise-constant density, evaluated inside a mass
/// interval known to contain no breakpoint mass.
struct Quantile<'a> {
    pts: &'a [f64],
    cum: &'a [f64],
}

impl<'a> Quantile<'a> {
    fn new(pts: &'a [f64], cum: &'a [f64]) -> Self {
        Self { pts, cum }
    }

    /// Value at mass m for m in [u, v]; (u, v) selects the cell so that
    /// zero-mass cells (flat cumulative stretches) are skipped correctly.
    fn at(&self, u: f64, v: f64, m: f64) -> f64 {
        // last cell index k with cum[k] <= u; its mass span covers (u, v)
        let k = self.cum.partition_point(|&c| c <= u).saturating_sub(1);
        let k = k.min(self.pts.len() - 2);
        let (m0, m1) = (self.cum[k], self.cum[k + 1]);
        let (x0, x1) = (self.pts[k], self.pts[k + 1]);
        debug_assert!(m1 >= v && m0 <= u, "mass interval escapes cell");
        if m1 == m0 {
            x0
        } else {
            x0 + (m - m0) * (x1 - x0) / (m1 - m0)
        }
    }
}

/// W2 between two same-N particle configurations under the gap-mass
/// convention: the distance between the reconstructed densities, evaluated
/// by the shared-mass-grid closed form.
pub fn w2_atoms(a: &SpeciesConfig, b: &SpeciesConfig) -> Result<f64> {
    Ok(w2_same_grid_sq(a, b)?.max(0.0).sqrt())
}

/// Squared same-grid W2; cheap enough for inner solver loops.
pub(crate) fn w2_same_grid_sq(a: &SpeciesConfig, b: &SpeciesConfig) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::SpeciesSizeMismatch {
            rho: a.n(),
            eta: b.n(),
        });
    }
    Ok(w2_positions_sq(a.positions(), b.positions()))
}

/// Same-grid squared W2 on raw sorted position vectors (same length).
pub(crate) fn w2_positions_sq(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() - 1;
    neumaier_sum((0..n).map(|k| {
        let u = a[k] - b[k];
        let v = a[k + 1] - b[k + 1];
        (u * u + u * v + v * v) / (3.0 * n as f64)
    }))
}

/// Naive monotone atom pairing with uniform weights 1/(N+1). Documented
/// approximation for diagnostics only; the gap-mass convention
/// ([`w2_atoms`]) is what every contract in this crate uses.
pub fn w2_atoms_pairing(a: &SpeciesConfig, b: &SpeciesConfig) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::SpeciesSizeMismatch {
            rho: a.n(),
            eta: b.n(),
        });
    }
    let m = a.positions().len() as f64;
    let sq = neumaier_sum(
        a.positions()
            .iter()
            .zip(b.positions())
            .map(|(x, y)| (x - y) * (x - y) / m),
    );
    Ok(sq.max(0.0).sqrt())
}

/// Product distance sqrt(W2(rho1, rho2)^2 + W2(eta1, eta2)^2) on the
/// reconstructed densities, for states of the same resolution.
pub fn product_w2(s1: &SystemState, s2: &SystemState) -> Result<f64> {
    if s1.n() != s2.n() {
        return Err(Error::SpeciesSizeMismatch {
            rho: s1.n(),
            eta: s2.n(),
        });
    }
    Ok(product_w2_cross(s1, s2))
}

/// Same product distance without the resolution check; the quantile-merge
/// route is exact for any pair of cell counts, which is what comparing an
/// N-run against its 2N-run needs.
pub fn product_w2_cross(s1: &SystemState, s2: &SystemState) -> f64 {
    let dr = w2_density(
        &PiecewiseDensity::from_config(s1.rho()),
        &PiecewiseDensity::from_config(s2.rho()),
    );
    let de = w2_density(
        &PiecewiseDensity::from_config(s1.eta()),
        &PiecewiseDensity::from_config(s2.eta()),
    );
    (dr * dr + de * de).sqrt()
}
