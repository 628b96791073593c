//! The particle ODE system: right-hand sides, time integration, and
//! trajectory diagnostics.
//!
//! The production right-hand side replaces W' with exact mean slopes of W
//! over inter-particle gaps. `velocity_naive` is the literal double sum;
//! `velocity_fast` evaluates the identical quantity through the scan
//! accumulators in linear time; `velocity_classical` is the pointwise
//! W'-sum scheme kept for comparison experiments.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::energy::{energy_state, StateGeometry};
use crate::error::{Error, Result, Species};
use crate::kernel::{exp_decay_mean, w_prime};
use crate::state::{PiecewiseDensity, SpeciesConfig, SystemState};
use crate::util::merge_sorted;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VelocityMode {
    DifferenceQuotientNaive,
    DifferenceQuotientFast,
    ClassicalPointwise,
}

impl std::fmt::Display for VelocityMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VelocityMode::DifferenceQuotientNaive => write!(f, "naive"),
            VelocityMode::DifferenceQuotientFast => write!(f, "fast"),
            VelocityMode::ClassicalPointwise => write!(f, "classical"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    /// reject a step if any same-species gap of a stage or the result
    /// falls below this
    pub gap_floor: f64,
    pub max_step_halvings: u32,
    pub mode: VelocityMode,
    /// record every k-th step; None picks k so that about 512 samples
    /// are kept
    pub sample_cadence: Option<usize>,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64, mode: VelocityMode) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::BadParameter {
                name: "integrator.dt",
                value: dt,
            });
        }
        if !t_end.is_finite() || t_end < 0.0 {
            return Err(Error::BadParameter {
                name: "integrator.t_end",
                value: t_end,
            });
        }
        Ok(IntegratorConfig {
            dt,
            t_end,
            gap_floor: 1e-12,
            max_step_halvings: 40,
            mode,
            sample_cadence: None,
        })
    }
}

/// Velocities of every particle, (rho list, eta list), by the chosen mode.
pub fn velocity(state: &SystemState, mode: VelocityMode) -> (Vec<f64>, Vec<f64>) {
    match mode {
        VelocityMode::DifferenceQuotientNaive => velocity_naive(state),
        VelocityMode::DifferenceQuotientFast => velocity_fast(state),
        VelocityMode::ClassicalPointwise => velocity_classical(state),
    }
}

/// Literal difference-quotient double sum, O(N^2). This is the value oracle
/// the fast mode is tested against.
pub fn velocity_naive(state: &SystemState) -> (Vec<f64>, Vec<f64>) {
    let x = state.rho().positions();
    let y = state.eta().positions();
    let n = state.n() as f64;
    let gx: Vec<f64> = (0..state.n()).map(|k| exp_decay_mean(x[k + 1] - x[k])).collect();
    let gy: Vec<f64> = (0..state.n()).map(|k| exp_decay_mean(y[k + 1] - y[k])).collect();
    let vx: Vec<f64> = x
        .par_iter()
        .map(|&p| (dq_sum(x, &gx, p) - dq_sum(y, &gy, p)) / n)
        .collect();
    let vy: Vec<f64> = y
        .par_iter()
        .map(|&p| (dq_sum(y, &gy, p) - dq_sum(x, &gx, p)) / n)
        .collect();
    (vx, vy)
}

/// Sum over cells of the mean slope of W'(. - p); `g` caches
/// exp_decay_mean of each gap.
fn dq_sum(breaks: &[f64], g: &[f64], p: f64) -> f64 {
    let mut s = 0.0;
    for k in 0..g.len() {
        let (a, b) = (breaks[k], breaks[k + 1]);
        s += if p <= a {
            -0.5 * (-(a - p)).exp() * g[k]
        } else if p >= b {
            0.5 * (-(p - b)).exp() * g[k]
        } else {
            0.5 * (f64::exp_m1(-(b - p)) - f64::exp_m1(-(p - a))) / (b - a)
        };
    }
    s
}

/// Same value contract as `velocity_naive` through the convolution form
/// -(W'*rho^N)(x_i) + (W'*eta^N)(x_i): two exponential scans over the
/// merged positions, O(N) after the merge.
///
/// The RHS runs four times per RK4 step, so all working buffers live in a
/// thread-local scratch; only the two output vectors are allocated.
pub fn velocity_fast(state: &SystemState) -> (Vec<f64>, Vec<f64>) {
    thread_local! {
        static SCRATCH: std::cell::RefCell<FastScratch> =
            std::cell::RefCell::new(FastScratch::default());
    }
    SCRATCH.with(|s| fast_velocity_with(state, &mut s.borrow_mut()))
}

#[derive(Default)]
struct FastScratch {
    /// merged positions; interleaved scan state per species:
    /// l, r, and segment height
    nodes: Vec<f64>,
    rho_at: Vec<usize>,
    eta_at: Vec<usize>,
    lx: Vec<f64>,
    rx: Vec<f64>,
    sx: Vec<f64>,
    ly: Vec<f64>,
    ry: Vec<f64>,
    sy: Vec<f64>,
    decay: Vec<f64>,
    em1: Vec<f64>,
}

fn fast_velocity_with(state: &SystemState, sc: &mut FastScratch) -> (Vec<f64>, Vec<f64>) {
    let x = state.rho().positions();
    let y = state.eta().positions();
    let n = state.n();
    let nf = n as f64;
    let m = x.len() + y.len();

    sc.nodes.clear();
    sc.rho_at.clear();
    sc.eta_at.clear();
    sc.nodes.reserve(m);
    sc.rho_at.reserve(x.len());
    sc.eta_at.reserve(y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let take_x = match (x.get(i), y.get(j)) {
            (Some(a), Some(b)) => a <= b,
            (Some(_), None) => true,
            _ => false,
        };
        if take_x {
            sc.rho_at.push(sc.nodes.len());
            sc.nodes.push(x[i]);
            i += 1;
        } else {
            sc.eta_at.push(sc.nodes.len());
            sc.nodes.push(y[j]);
            j += 1;
        }
    }

    sc.decay.clear();
    sc.em1.clear();
    sc.decay.reserve(m - 1);
    sc.em1.reserve(m - 1);
    for w in sc.nodes.windows(2) {
        let e = f64::exp_m1(-(w[1] - w[0]));
        sc.decay.push(1.0 + e);
        sc.em1.push(-e);
    }

    // segment heights of each reconstruction on (nodes[i], nodes[i+1]):
    // the gap mass 1/N spread over the gap that contains the segment
    let fill_heights = |pos: &[f64], at: &[usize], out: &mut Vec<f64>| {
        out.clear();
        out.resize(m - 1, 0.0);
        for k in 0..pos.len() - 1 {
            let h = 1.0 / (nf * (pos[k + 1] - pos[k]));
            for seg in at[k]..at[k + 1] {
                out[seg] = h;
            }
        }
    };
    fill_heights(x, &sc.rho_at, &mut sc.sx);
    fill_heights(y, &sc.eta_at, &mut sc.sy);

    let scan = |h: &[f64], l: &mut Vec<f64>, r: &mut Vec<f64>, decay: &[f64], em1: &[f64]| {
        l.clear();
        l.resize(m, 0.0);
        for i in 0..m - 1 {
            l[i + 1] = l[i] * decay[i] + h[i] * em1[i];
        }
        r.clear();
        r.resize(m, 0.0);
        for i in (0..m - 1).rev() {
            r[i] = r[i + 1] * decay[i] + h[i] * em1[i];
        }
    };
    scan(&sc.sx, &mut sc.lx, &mut sc.rx, &sc.decay, &sc.em1);
    scan(&sc.sy, &mut sc.ly, &mut sc.ry, &sc.decay, &sc.em1);

    let vx = sc
        .rho_at
        .iter()
        .map(|&k| 0.5 * (sc.lx[k] - sc.rx[k]) + 0.5 * (sc.ry[k] - sc.ly[k]))
        .collect();
    let vy = sc
        .eta_at
        .iter()
        .map(|&k| 0.5 * (sc.ly[k] - sc.ry[k]) + 0.5 * (sc.rx[k] - sc.lx[k]))
        .collect();
    (vx, vy)
}

/// Pointwise W'-sum scheme. Masses are 1/N on particles 0..N-1 and zero on
/// particle N, so only N particles per species carry mass; kept as an
/// experimental mode, with W'(0) = 0 covering cross-species coincidences.
pub fn velocity_classical(state: &SystemState) -> (Vec<f64>, Vec<f64>) {
    let x = state.rho().positions();
    let y = state.eta().positions();
    let n = state.n();
    let mass = 1.0 / n as f64;
    let field = |same: &[f64], other: &[f64], p: f64| -> f64 {
        let mut s = 0.0;
        for k in 0..n {
            s -= mass * w_prime(p - same[k]);
            s += mass * w_prime(p - other[k]);
        }
        s
    };
    let vx: Vec<f64> = x.par_iter().map(|&p| field(x, y, p)).collect();
    let vy: Vec<f64> = y.par_iter().map(|&p| field(y, x, p)).collect();
    (vx, vy)
}

struct Rejection {
    species: Species,
    gap_index: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct StepRejection {
    pub time: f64,
    pub dt: f64,
}

#[derive(Default)]
struct StepLog {
    rejections: Vec<StepRejection>,
    min_gap_seen: f64,
}

/// Advance one RK4 step of size dt. A proposed stage or result with a
/// same-species gap below `gap_floor` rejects the step, which is then
/// retried as two half steps, up to `max_step_halvings` deep.
pub fn step(state: &SystemState, dt: f64, cfg: &IntegratorConfig) -> Result<SystemState> {
    let mut log = StepLog {
        rejections: Vec::new(),
        min_gap_seen: f64::INFINITY,
    };
    advance(state, dt, cfg, 0, &mut log)
}

fn advance(
    state: &SystemState,
    dt: f64,
    cfg: &IntegratorConfig,
    depth: u32,
    log: &mut StepLog,
) -> Result<SystemState> {
    match rk4_try(state, dt, cfg) {
        Ok(next) => {
            log.min_gap_seen = log
                .min_gap_seen
                .min(next.rho().min_gap())
                .min(next.eta().min_gap());
            Ok(next)
        }
        Err(rej) => {
            log.rejections.push(StepRejection {
                time: state.time(),
                dt,
            });
            if depth >= cfg.max_step_halvings {
                return Err(Error::Stiffness {
                    time: state.time(),
                    species: rej.species,
                    gap_index: rej.gap_index,
                    halvings: depth,
                });
            }
            let half = advance(state, dt / 2.0, cfg, depth + 1, log)?;
            advance(&half, dt / 2.0, cfg, depth + 1, log)
        }
    }
}

fn rk4_try(
    state: &SystemState,
    dt: f64,
    cfg: &IntegratorConfig,
) -> std::result::Result<SystemState, Rejection> {
    let x0 = state.rho().positions();
    let y0 = state.eta().positions();
    let (kx1, ky1) = velocity(state, cfg.mode);
    let s2 = offset(state, x0, y0, 0.5 * dt, &kx1, &ky1, cfg)?;
    let (kx2, ky2) = velocity(&s2, cfg.mode);
    let s3 = offset(state, x0, y0, 0.5 * dt, &kx2, &ky2, cfg)?;
    let (kx3, ky3) = velocity(&s3, cfg.mode);
    let s4 = offset(state, x0, y0, dt, &kx3, &ky3, cfg)?;
    let (kx4, ky4) = velocity(&s4, cfg.mode);

    let combine = |p0: &[f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| -> Vec<f64> {
        (0..p0.len())
            .map(|i| p0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect()
    };
    let xf = combine(x0, &kx1, &kx2, &kx3, &kx4);
    let yf = combine(y0, &ky1, &ky2, &ky3, &ky4);
    build_state(&xf, &yf, state.time() + dt, cfg)
}

fn offset(
    state: &SystemState,
    x0: &[f64],
    y0: &[f64],
    h: f64,
    vx: &[f64],
    vy: &[f64],
    cfg: &IntegratorConfig,
) -> std::result::Result<SystemState, Rejection> {
    let x: Vec<f64> = x0.iter().zip(vx).map(|(p, v)| p + h * v).collect();
    let y: Vec<f64> = y0.iter().zip(vy).map(|(p, v)| p + h * v).collect();
    build_state(&x, &y, state.time(), cfg)
}

fn build_state(
    x: &[f64],
    y: &[f64],
    time: f64,
    cfg: &IntegratorConfig,
) -> std::result::Result<SystemState, Rejection> {
    for (species, pos) in [(Species::Rho, x), (Species::Eta, y)] {
        for i in 0..pos.len() - 1 {
            let gap = pos[i + 1] - pos[i];
            if !(gap >= cfg.gap_floor) || !pos[i].is_finite() {
                return Err(Rejection {
                    species,
                    gap_index: i,
                });
            }
        }
    }
    let rho = SpeciesConfig::new(x.to_vec()).map_err(|_| Rejection {
        species: Species::Rho,
        gap_index: 0,
    })?;
    let eta = SpeciesConfig::new(y.to_vec()).map_err(|_| Rejection {
        species: Species::Eta,
        gap_index: 0,
    })?;
    Ok(SystemState::new(rho, eta, time).expect("sizes preserved"))
}

/// Per-sample monitored quantities; `crossings` counts cross-species
/// adjacent-pair order changes cumulatively since t = 0.
#[derive(Clone, Copy, Debug)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub lp2_rho: f64,
    pub lp2_eta: f64,
    pub lpinf_rho: f64,
    pub lpinf_eta: f64,
    pub energy: f64,
    pub m2_rho: f64,
    pub m2_eta: f64,
    pub min_gap_rho: f64,
    pub min_gap_eta: f64,
    pub crossings: u64,
}

/// A sign change of y_j - x_i between two consecutive samples, for a pair
/// that was adjacent in the merged particle order at the earlier sample.
#[derive(Clone, Copy, Debug)]
pub struct CrossingEvent {
    pub t_before: f64,
    pub t_after: f64,
    pub rho_index: usize,
    pub eta_index: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<SystemState>,
    diagnostics: Vec<DiagnosticsRecord>,
    events: Vec<CrossingEvent>,
    rejections: Vec<StepRejection>,
    min_gap_overall: f64,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    pub fn diagnostics(&self) -> &[DiagnosticsRecord] {
        &self.diagnostics
    }

    pub fn events(&self) -> &[CrossingEvent] {
        &self.events
    }

    pub fn rejections(&self) -> &[StepRejection] {
        &self.rejections
    }

    /// Smallest same-species gap seen at any accepted step, not just at
    /// samples.
    pub fn min_gap_overall(&self) -> f64 {
        self.min_gap_overall
    }

    pub fn final_state(&self) -> &SystemState {
        self.states.last().expect("trajectory never empty")
    }

    pub fn sample_index(&self, t: f64) -> Option<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    /// One row per (time, species, index, position).
    pub fn write_trajectory_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,species,index,position")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            for (i, p) in s.rho().positions().iter().enumerate() {
                writeln!(out, "{t:e},rho,{i},{p:e}")?;
            }
            for (j, p) in s.eta().positions().iter().enumerate() {
                writeln!(out, "{t:e},eta,{j},{p:e}")?;
            }
        }
        Ok(())
    }

    pub fn write_diagnostics_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "t,lp2_rho,lp2_eta,lpinf_rho,lpinf_eta,energy,m2_rho,m2_eta,min_gap_rho,min_gap_eta,crossings"
        )?;
        for d in &self.diagnostics {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
                d.t,
                d.lp2_rho,
                d.lp2_eta,
                d.lpinf_rho,
                d.lpinf_eta,
                d.energy,
                d.m2_rho,
                d.m2_eta,
                d.min_gap_rho,
                d.min_gap_eta,
                d.crossings
            )?;
        }
        Ok(())
    }
}

/// Integrate on [0, t_end] with fixed sampling, recording diagnostics and
/// cross-species crossing events at every sample.
pub fn simulate(s0: &SystemState, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let n_steps = if cfg.t_end == 0.0 {
        0
    } else {
        let ratio = cfg.t_end / cfg.dt;
        if (ratio - ratio.round()).abs() < 1e-9 {
            ratio.round() as usize
        } else {
            ratio.ceil() as usize
        }
    };
    let cadence = cfg
        .sample_cadence
        .unwrap_or_else(|| (n_steps / 512).max(1))
        .max(1);

    let mut traj = Trajectory {
        min_gap_overall: s0.rho().min_gap().min(s0.eta().min_gap()),
        ..Default::default()
    };
    let mut log = StepLog {
        rejections: Vec::new(),
        min_gap_seen: f64::INFINITY,
    };
    let t0 = s0.time();
    let mut tracker = CrossingTracker::new(s0);
    let mut crossings = 0u64;
    let mut cur = s0.clone();
    record_sample(&mut traj, &cur, crossings);

    for k in 1..=n_steps {
        let target = (t0 + (k as f64) * cfg.dt).min(t0 + cfg.t_end);
        let dt = target - cur.time();
        cur = advance(&cur, dt, cfg, 0, &mut log)?;
        cur = cur.with_time(target);
        traj.min_gap_overall = traj.min_gap_overall.min(log.min_gap_seen);
        if k % cadence == 0 || k == n_steps {
            crossings += tracker.update(&cur, &mut traj.events);
            record_sample(&mut traj, &cur, crossings);
        }
    }
    traj.rejections = std::mem::take(&mut log.rejections);
    Ok(traj)
}

fn record_sample(traj: &mut Trajectory, state: &SystemState, crossings: u64) {
    let dr = PiecewiseDensity::from_config(state.rho());
    let de = PiecewiseDensity::from_config(state.eta());
    let rec = DiagnosticsRecord {
        t: state.time(),
        lp2_rho: dr.lp_norm(2.0).expect("p=2 valid"),
        lp2_eta: de.lp_norm(2.0).expect("p=2 valid"),
        lpinf_rho: dr.lp_norm(f64::INFINITY).expect("p=inf valid"),
        lpinf_eta: de.lp_norm(f64::INFINITY).expect("p=inf valid"),
        energy: energy_state(state).total,
        m2_rho: dr.second_moment(),
        m2_eta: de.second_moment(),
        min_gap_rho: state.rho().min_gap(),
        min_gap_eta: state.eta().min_gap(),
        crossings,
    };
    traj.times.push(state.time());
    traj.states.push(state.clone());
    traj.diagnostics.push(rec);
}

/// Tracks sign(y_j - x_i) for cross-species pairs adjacent in the merged
/// order at the previous sample.
struct CrossingTracker {
    prev_time: f64,
    signs: BTreeMap<(usize, usize), i8>,
}

impl CrossingTracker {
    fn new(state: &SystemState) -> Self {
        CrossingTracker {
            prev_time: state.time(),
            signs: Self::scan(state),
        }
    }

    fn scan(state: &SystemState) -> BTreeMap<(usize, usize), i8> {
        let x = state.rho().positions();
        let y = state.eta().positions();
        let (_, xi, yi) = merge_sorted(x, y);
        // node index -> (species, particle index)
        let mut owner = vec![(Species::Rho, 0usize); x.len() + y.len()];
        for (i, &k) in xi.iter().enumerate() {
            owner[k] = (Species::Rho, i);
        }
        for (j, &k) in yi.iter().enumerate() {
            owner[k] = (Species::Eta, j);
        }
        let mut map = BTreeMap::new();
        for w in owner.windows(2) {
            let key = match (w[0], w[1]) {
                ((Species::Rho, i), (Species::Eta, j)) => Some((i, j)),
                ((Species::Eta, j), (Species::Rho, i)) => Some((i, j)),
                _ => None,
            };
            if let Some((i, j)) = key {
                let sign = if y[j] - x[i] >= 0.0 { 1 } else { -1 };
                map.insert((i, j), sign);
            }
        }
        map
    }

    /// Returns the number of sign flips since the previous sample and
    /// refreshes the tracked pair set.
    fn update(&mut self, state: &SystemState, events: &mut Vec<CrossingEvent>) -> u64 {
        let x = state.rho().positions();
        let y = state.eta().positions();
        let mut flips = 0;
        for (&(i, j), &old) in self.signs.iter() {
            let now = if y[j] - x[i] >= 0.0 { 1 } else { -1 };
            if now != old {
                flips += 1;
                events.push(CrossingEvent {
                    t_before: self.prev_time,
                    t_after: state.time(),
                    rho_index: i,
                    eta_index: j,
                });
            }
        }
        self.prev_time = state.time();
        self.signs = Self::scan(state);
        flips
    }
}

/// Max over both species and all cells of the discrepancy between the two
/// algebraic routes to d/dt of a gap: the velocity difference of its
/// endpoints versus the elliptic-law cell integral
/// -(integral of W*rho - mass_rho) + (integral of W*eta - mass_eta).
pub fn spacing_derivative_check(state: &SystemState) -> f64 {
    let (vx, vy) = velocity_naive(state);
    let geom = StateGeometry::new(state);
    let n = state.n();

    let per_species = |own_nodes: &[usize], v: &[f64], own_is_rho: bool| -> f64 {
        let mut worst: f64 = 0.0;
        let mut seg = 0usize;
        for k in 0..n {
            let mut int_w_own = 0.0;
            let mut int_w_other = 0.0;
            let mut mass_other = 0.0;
            while seg < own_nodes[k] {
                seg += 1;
            }
            for i in own_nodes[k]..own_nodes[k + 1] {
                let delta = geom.nodes[i + 1] - geom.nodes[i];
                let (zr, ze) = (
                    geom.rho_sweep.w_integral_seg(i, delta),
                    geom.eta_sweep.w_integral_seg(i, delta),
                );
                let (mr, me) = (
                    geom.rho_sweep.mass_seg(i, delta),
                    geom.eta_sweep.mass_seg(i, delta),
                );
                if own_is_rho {
                    int_w_own += zr;
                    int_w_other += ze;
                    mass_other += me;
                } else {
                    int_w_own += ze;
                    int_w_other += zr;
                    mass_other += mr;
                }
            }
            let lhs = v[k + 1] - v[k];
            let rhs = -(int_w_own - 1.0 / n as f64) + (int_w_other - mass_other);
            worst = worst.max((lhs - rhs).abs());
        }
        worst
    };
    let wr = per_species(&geom.rho_nodes, &vx, true);
    let we = per_species(&geom.eta_nodes, &vy, false);
    wr.max(we)
}
