//! Minimizing-movement (JKO) reference solver on the equal-gap-mass
//! Lagrangian manifold: each outer step minimizes
//!
//!   F(gamma) = W2^2(prev, gamma) / (2 tau) + E(gamma)
//!
//! over the particle positions of both species, with W2^2 the exact
//! quantile-function distance between the reconstructions and E the exact
//! density energy. The inner solver is plain gradient descent with
//! backtracking; each trial point re-sorts the species, which realizes the
//! monotone optimal pairing in one dimension.

use crate::dynamics::{simulate, IntegratorConfig};
use crate::energy::{energy_atoms, energy_position_gradient, energy_state};
use crate::error::{Error, Result};
use crate::kernel::w_prime;
use crate::state::{product_w2, w2_positions_sq, SpeciesConfig, SystemState};
use crate::util::l2_norm;

#[derive(Clone, Debug)]
pub struct JkoConfig {
    /// outer time step
    pub tau: f64,
    pub n_steps: usize,
    /// stop the inner solve once the gradient norm is below this
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    /// backtracking: first trial step size
    pub step_init: f64,
    /// backtracking: shrink factor
    pub step_shrink: f64,
    /// backtracking: sufficient-decrease constant
    pub sufficient_decrease: f64,
    /// trial states with a same-species gap below this are rejected
    pub gap_floor: f64,
}

impl JkoConfig {
    pub fn new(tau: f64, n_steps: usize) -> Result<Self> {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::BadParameter {
                name: "jko.tau",
                value: tau,
            });
        }
        Ok(JkoConfig {
            tau,
            n_steps,
            inner_tol: 1e-10,
            inner_max_iters: 100_000,
            step_init: 1.0,
            step_shrink: 0.5,
            sufficient_decrease: 1e-4,
            gap_floor: 1e-12,
        })
    }
}

/// What the inner solve did for one outer step.
#[derive(Clone, Copy, Debug)]
pub struct JkoStepReport {
    pub inner_iterations: usize,
    pub grad_norm: f64,
    /// true when the line search hit the floating-point noise floor before
    /// the gradient tolerance was reached
    pub stalled: bool,
}

/// One JKO step from `prev`. The returned state has time advanced by tau
/// and F(returned) <= F(prev) up to accumulated rounding.
pub fn jko_step(prev: &SystemState, cfg: &JkoConfig) -> Result<(SystemState, JkoStepReport)> {
    jko_step_inner(prev, cfg, 0)
}

fn jko_step_inner(
    prev: &SystemState,
    cfg: &JkoConfig,
    outer_index: usize,
) -> Result<(SystemState, JkoStepReport)> {
    let n = prev.n();
    let dim = 2 * (n + 1);
    let prev_x = prev.rho().positions().to_vec();
    let prev_y = prev.eta().positions().to_vec();

    let objective = |xs: &[f64], ys: &[f64]| -> Result<(f64, SystemState)> {
        let state = SystemState::new(
            SpeciesConfig::new(xs.to_vec())?,
            SpeciesConfig::new(ys.to_vec())?,
            prev.time(),
        )?;
        let transport = w2_positions_sq(xs, &prev_x) + w2_positions_sq(ys, &prev_y);
        Ok((transport / (2.0 * cfg.tau) + energy_state(&state).total, state))
    };

    let gradient = |state: &SystemState| -> Vec<f64> {
        let (mut gx, mut gy) = energy_position_gradient(state);
        add_transport_gradient(&mut gx, state.rho().positions(), &prev_x, cfg.tau);
        add_transport_gradient(&mut gy, state.eta().positions(), &prev_y, cfg.tau);
        let mut g = gx;
        g.append(&mut gy);
        debug_assert_eq!(g.len(), dim);
        g
    };

    let mut cur_x = prev_x.clone();
    let mut cur_y = prev_y.clone();
    let (mut f_cur, mut cur_state) = objective(&cur_x, &cur_y)?;
    let mut accepted_any = false;
    let mut iterations = 0usize;
    let mut stalled = false;
    let mut grad_norm;

    loop {
        let g = gradient(&cur_state);
        grad_norm = l2_norm(&g);
        if grad_norm <= cfg.inner_tol || iterations >= cfg.inner_max_iters {
            break;
        }
        iterations += 1;

        let mut alpha = cfg.step_init;
        let mut moved = false;
        // a shrink floor rather than a count: below it no coordinate can
        // move by a representable amount
        while alpha * grad_norm > 1e-18 {
            let mut trial_x: Vec<f64> = cur_x
                .iter()
                .zip(&g[..n + 1])
                .map(|(p, gi)| p - alpha * gi)
                .collect();
            let mut trial_y: Vec<f64> = cur_y
                .iter()
                .zip(&g[n + 1..])
                .map(|(p, gi)| p - alpha * gi)
                .collect();
            trial_x.sort_by(|a, b| a.partial_cmp(b).unwrap());
            trial_y.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let min_gap = trial_x
                .windows(2)
                .chain(trial_y.windows(2))
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min);
            if min_gap < cfg.gap_floor {
                alpha *= cfg.step_shrink;
                continue;
            }
            let (f_trial, trial_state) = objective(&trial_x, &trial_y)?;
            // the strict inequality matters: once the Armijo decrement
            // underflows against ulp(F), only representable progress counts
            if f_trial < f_cur
                && f_trial <= f_cur - cfg.sufficient_decrease * alpha * grad_norm * grad_norm
            {
                cur_x = trial_x;
                cur_y = trial_y;
                f_cur = f_trial;
                cur_state = trial_state;
                moved = true;
                accepted_any = true;
                break;
            }
            alpha *= cfg.step_shrink;
        }
        if !moved {
            // measurable decrease is no longer representable in f64
            if accepted_any || grad_norm <= 1e-6 {
                stalled = true;
                break;
            }
            return Err(Error::OptimizationFailure {
                step: outer_index,
                detail: format!(
                    "no descent step found from the previous iterate (grad norm {grad_norm:.3e})"
                ),
            });
        }
    }

    let out = cur_state.with_time(prev.time() + cfg.tau);
    Ok((
        out,
        JkoStepReport {
            inner_iterations: iterations,
            grad_norm,
            stalled,
        },
    ))
}

/// d/dx_m of W2^2(x, prev)/(2 tau), added onto an energy gradient in place.
fn add_transport_gradient(g: &mut [f64], x: &[f64], prev: &[f64], tau: f64) {
    let n = x.len() - 1;
    let scale = 1.0 / (2.0 * tau * 3.0 * n as f64);
    for m in 0..=n {
        let u = x[m] - prev[m];
        let mut s = 0.0;
        if m > 0 {
            s += x[m - 1] - prev[m - 1] + 2.0 * u;
        }
        if m < n {
            s += 2.0 * u + x[m + 1] - prev[m + 1];
        }
        g[m] += scale * s;
    }
}

#[derive(Clone, Debug)]
pub struct JkoResult {
    pub states: Vec<SystemState>,
    pub energies: Vec<f64>,
    /// W2^2 between consecutive iterates
    pub transport_costs: Vec<f64>,
    pub inner_iterations: Vec<usize>,
}

impl JkoResult {
    /// CSV rows (step, time, energy, transport_cost, inner_iterations).
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,time,energy,transport_cost,inner_iterations")?;
        for k in 0..self.states.len() {
            let cost = if k == 0 { 0.0 } else { self.transport_costs[k - 1] };
            let inner = if k == 0 { 0 } else { self.inner_iterations[k - 1] };
            writeln!(
                out,
                "{},{:e},{:e},{:e},{}",
                k,
                self.states[k].time(),
                self.energies[k],
                cost,
                inner
            )?;
        }
        Ok(())
    }
}

/// Run n_steps of the scheme from s0.
pub fn jko_flow(s0: &SystemState, cfg: &JkoConfig) -> Result<JkoResult> {
    let mut states = vec![s0.clone()];
    let mut energies = vec![energy_state(s0).total];
    let mut transport_costs = Vec::with_capacity(cfg.n_steps);
    let mut inner_iterations = Vec::with_capacity(cfg.n_steps);
    for k in 0..cfg.n_steps {
        let prev = states.last().unwrap().clone();
        let (next, report) = jko_step_inner(&prev, cfg, k)?;
        transport_costs.push(
            w2_positions_sq(next.rho().positions(), prev.rho().positions())
                + w2_positions_sq(next.eta().positions(), prev.eta().positions()),
        );
        energies.push(energy_state(&next).total);
        inner_iterations.push(report.inner_iterations);
        states.push(next);
    }
    Ok(JkoResult {
        states,
        energies,
        transport_costs,
        inner_iterations,
    })
}

/// Distance between the JKO iterate at t_end and the ODE state at t_end,
/// for each outer step size. Each tau must divide t_end.
pub fn compare_to_ode(
    s0: &SystemState,
    t_end: f64,
    taus: &[f64],
    integrator: &IntegratorConfig,
    jko_template: &JkoConfig,
) -> Result<Vec<(f64, f64)>> {
    let mut icfg = integrator.clone();
    icfg.t_end = t_end;
    let ode_final = simulate(s0, &icfg)?.final_state().clone();
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let steps = t_end / tau;
        if (steps - steps.round()).abs() > 1e-9 * steps.abs().max(1.0) {
            return Err(Error::BadParameter {
                name: "jko.tau (must divide t_end)",
                value: tau,
            });
        }
        let mut cfg = jko_template.clone();
        cfg.tau = tau;
        cfg.n_steps = steps.round() as usize;
        let flow = jko_flow(s0, &cfg)?;
        let dist = product_w2(flow.states.last().unwrap(), &ode_final)?;
        rows.push((tau, dist));
    }
    Ok(rows)
}

/// One JKO step for the degenerate single-atom-per-species illustration:
/// atomic energy 1/2 - W(x - y) with plain squared distances as transport.
/// Gradient descent with backtracking, same recipe as the manifold solver.
pub fn jko_step_atom_pair(x0: f64, y0: f64, tau: f64) -> (f64, f64) {
    let f = |x: f64, y: f64| -> f64 {
        ((x - x0).powi(2) + (y - y0).powi(2)) / (2.0 * tau)
            + energy_atoms(&[x], &[y], 1.0).unwrap().total
    };
    let grad = |x: f64, y: f64| -> (f64, f64) {
        let dw = w_prime(x - y);
        ((x - x0) / tau - dw, (y - y0) / tau + dw)
    };
    let (mut x, mut y) = (x0, y0);
    let mut fx = f(x, y);
    for _ in 0..10_000 {
        let (gx, gy) = grad(x, y);
        let gn = (gx * gx + gy * gy).sqrt();
        if gn <= 1e-14 {
            break;
        }
        let mut alpha = tau.min(1.0);
        let mut moved = false;
        while alpha * gn > 1e-18 {
            let (tx, ty) = (x - alpha * gx, y - alpha * gy);
            let ft = f(tx, ty);
            if ft <= fx - 1e-4 * alpha * gn * gn {
                x = tx;
                y = ty;
                fx = ft;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (x, y)
}
