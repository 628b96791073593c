//! Acceptance suite: every quantitative claim the artifact makes, one test
//! per criterion, each printing a PASS line with the measured numbers
//! (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Tests serialize through a mutex so the wall-clock limits and the
//! performance ratios are measured on a quiet machine.

use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use morsesim::analysis::{
    convergence_study, kernel_selftest, perturbed_state, stability_experiment,
    weak_form_residual_signed, TestFunction,
};
use morsesim::cli::{parse_config_text, run};
use morsesim::dynamics::{
    simulate, velocity_classical, velocity_fast, velocity_naive, IntegratorConfig, VelocityMode,
};
use morsesim::energy::{energy_atoms, energy_state, subdifferential_atoms};
use morsesim::jko::{compare_to_ode, jko_flow, JkoConfig};
use morsesim::state::{CdfTable, InitialDensity, PiecewiseDensity, SpeciesConfig, SystemState};
use morsesim::Species;

fn serial() -> MutexGuard<'static, ()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    LOCK.get_or_init(|| Mutex::new(()))
        .lock()
        .unwrap_or_else(|p| p.into_inner())
}

fn sorted_positions(rng: &mut StdRng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    loop {
        let mut p: Vec<f64> = (0..=n).map(|_| rng.gen_range(lo..hi)).collect();
        p.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if p.windows(2).all(|w| w[1] - w[0] > 1e-10) {
            return p;
        }
    }
}

fn random_state(rng: &mut StdRng, n: usize) -> SystemState {
    let rho = SpeciesConfig::new(sorted_positions(rng, n, -2.0, 1.0)).unwrap();
    let eta = SpeciesConfig::new(sorted_positions(rng, n, -1.0, 2.0)).unwrap();
    SystemState::new(rho, eta, 0.0).unwrap()
}

fn uniform(a: f64, b: f64) -> InitialDensity {
    InitialDensity::uniform(a, b).unwrap()
}

fn tent(center: f64, halfwidth: f64) -> InitialDensity {
    InitialDensity::Cdf(CdfTable::tent(center, halfwidth, 2048).unwrap())
}

#[test]
fn c01_kernel_selftest() {
    let _guard = serial();
    let start = Instant::now();
    let items = kernel_selftest();
    let elapsed = start.elapsed();
    for item in &items {
        assert!(item.pass, "criterion 01 FAIL at {}: {}", item.name, item.detail);
    }
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "criterion 01 runtime {elapsed:?} exceeds 1 s"
    );
    println!(
        "criterion 01 kernel self-test: PASS ({} checks, {:.0} ms)",
        items.len(),
        elapsed.as_secs_f64() * 1e3
    );
}

#[test]
fn c02_velocity_oracle_equivalence() {
    let _guard = serial();
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x51CA);
    let mut worst_fast: f64 = 0.0;
    let mut worst_conv: f64 = 0.0;
    for &n in &[8usize, 64, 512, 4096] {
        for _ in 0..100 {
            let s = random_state(&mut rng, n);
            let (vxn, vyn) = velocity_naive(&s);
            let (vxf, vyf) = velocity_fast(&s);
            for i in 0..=n {
                worst_fast = worst_fast
                    .max((vxn[i] - vxf[i]).abs())
                    .max((vyn[i] - vyf[i]).abs());
            }
            // convolution-form identity: all components at small N, a
            // deterministic stride at the largest
            let dr = PiecewiseDensity::from_config(s.rho());
            let de = PiecewiseDensity::from_config(s.eta());
            let stride = if n >= 4096 { 64 } else { 1 };
            let mut i = 0;
            while i <= n {
                let xi = s.rho().positions()[i];
                let conv_x = -dr.convolve_w_prime(xi) + de.convolve_w_prime(xi);
                worst_conv = worst_conv.max((vxn[i] - conv_x).abs());
                let yi = s.eta().positions()[i];
                let conv_y = -de.convolve_w_prime(yi) + dr.convolve_w_prime(yi);
                worst_conv = worst_conv.max((vyn[i] - conv_y).abs());
                i += stride;
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(worst_fast <= 1e-10, "criterion 02 FAIL: fast vs naive {worst_fast:e}");
    assert!(worst_conv <= 1e-10, "criterion 02 FAIL: naive vs convolution {worst_conv:e}");
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "criterion 02 runtime {elapsed:?} exceeds 30 s"
    );
    println!(
        "criterion 02 velocity oracle equivalence: PASS (fast-naive {worst_fast:.2e}, \
         naive-convolution {worst_conv:.2e}, {:.1} s)",
        elapsed.as_secs_f64()
    );
}

#[test]
fn c03_c05_non_collision_and_lp_growth() {
    let _guard = serial();
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xC011);
    let mut worst_ratio: f64 = 0.0;
    let mut min_gap_seen = f64::INFINITY;
    let mut runs = 0usize;
    for pair in 0..50 {
        // random compactly supported pair: uniform blocks with random
        // placement, possibly overlapping
        let a = rng.gen_range(-3.0..0.0);
        let la = rng.gen_range(0.5..2.0);
        let b = rng.gen_range(-1.5..1.5);
        let lb = rng.gen_range(0.5..2.0);
        let rho0 = uniform(a, a + la);
        let eta0 = uniform(b, b + lb);
        for &n in &[8usize, 32, 128] {
            let s0 =
                SystemState::new(rho0.atomize(n).unwrap(), eta0.atomize(n).unwrap(), 0.0).unwrap();
            let icfg =
                IntegratorConfig::new(1e-3, 5.0, VelocityMode::DifferenceQuotientFast).unwrap();
            // gap_floor 1e-12 is the constructor default
            assert_eq!(icfg.gap_floor, 1e-12);
            let traj = simulate(&s0, &icfg).unwrap_or_else(|e| {
                panic!("criterion 03 FAIL: stiffness failure on pair {pair} at n {n}: {e}")
            });
            assert!(
                traj.min_gap_overall() > 0.0,
                "criterion 03 FAIL: gap collapsed (pair {pair}, n {n})"
            );
            min_gap_seen = min_gap_seen.min(traj.min_gap_overall());
            // criterion 5 rides on these runs: worst ratio over t <= 3
            for p in [2.0, f64::INFINITY] {
                let mut sub = 0.0f64;
                let t0 = traj.times()[0];
                let initial = {
                    let s = &traj.states()[0];
                    PiecewiseDensity::from_config(s.rho()).lp_norm(p).unwrap()
                        + PiecewiseDensity::from_config(s.eta()).lp_norm(p).unwrap()
                };
                for (t, s) in traj.times().iter().zip(traj.states()) {
                    if *t - t0 > 3.0 {
                        break;
                    }
                    let v = PiecewiseDensity::from_config(s.rho()).lp_norm(p).unwrap()
                        + PiecewiseDensity::from_config(s.eta()).lp_norm(p).unwrap();
                    sub = sub.max(v / ((*t - t0).exp() * initial));
                }
                worst_ratio = worst_ratio.max(sub);
            }
            runs += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(
        worst_ratio <= 1.0 + 1e-3,
        "criterion 05 FAIL: L^p growth ratio {worst_ratio}"
    );
    assert!(
        elapsed.as_secs_f64() < 300.0,
        "criterion 03 runtime {elapsed:?} exceeds 5 min"
    );
    println!(
        "criterion 03 non-collision: PASS ({runs} runs, zero stiffness failures, \
         smallest gap {min_gap_seen:.3e}, {:.1} s)",
        elapsed.as_secs_f64()
    );
    println!("criterion 05 L^p growth: PASS (worst ratio {worst_ratio:.6} over p in {{2, inf}})");
}

#[test]
fn c04_opposite_species_mixing() {
    let _guard = serial();
    let start = Instant::now();
    let s0 = SystemState::new(
        SpeciesConfig::new(vec![-2.0, -1.0]).unwrap(),
        SpeciesConfig::new(vec![1.0, 2.0]).unwrap(),
        0.0,
    )
    .unwrap();
    let icfg = IntegratorConfig::new(1e-3, 10.0, VelocityMode::DifferenceQuotientFast).unwrap();
    let traj = simulate(&s0, &icfg).unwrap();

    let f_of = |s: &SystemState| s.eta().positions()[0] - s.rho().positions()[1];
    let d_of = |s: &SystemState| s.eta().positions()[1] - s.eta().positions()[0];
    let mut t_below = None;
    for (t, s) in traj.times().iter().zip(traj.states()) {
        if f_of(s) < 1e-2 {
            t_below = Some(*t);
            break;
        }
    }
    let t_below = t_below.expect("criterion 04 FAIL: f never fell below 1e-2");

    // 3 f + 2 d_1 nonincreasing within 1e-6 per unit time, over the whole
    // sampled trajectory (it keeps decreasing even past the crossing)
    let mut worst_rate = f64::NEG_INFINITY;
    for k in 1..traj.states().len() {
        let mu0 = 3.0 * f_of(&traj.states()[k - 1]) + 2.0 * d_of(&traj.states()[k - 1]);
        let mu1 = 3.0 * f_of(&traj.states()[k]) + 2.0 * d_of(&traj.states()[k]);
        worst_rate = worst_rate.max((mu1 - mu0) / (traj.times()[k] - traj.times()[k - 1]));
    }
    let elapsed = start.elapsed();
    assert!(
        worst_rate <= 1e-6,
        "criterion 04 FAIL: 3f + 2d1 increased at rate {worst_rate:e}"
    );
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "criterion 04 runtime {elapsed:?} exceeds 10 s"
    );
    println!(
        "criterion 04 opposite-species mixing: PASS (f < 1e-2 at t = {t_below:.4}, \
         monitor worst rate {worst_rate:.3e}, {:.1} s)",
        elapsed.as_secs_f64()
    );
}

/// Shared machinery for criterion 6: Richardson-extrapolated N-part and
/// isolated dt^2 coefficient of the weak-form residual, reported as the
/// envelope over a family of bump positions and sample times.
fn weak_form_n_part(n: usize) -> (f64, f64, f64) {
    let rho0 = uniform(-1.2, 0.2);
    let eta0 = uniform(-0.2, 1.2);
    let phis = [
        TestFunction::gaussian(-0.3, 0.5),
        TestFunction::gaussian(0.2, 0.35),
        TestFunction::gaussian(-0.6, 0.45),
    ];
    let s0 = SystemState::new(rho0.atomize(n).unwrap(), eta0.atomize(n).unwrap(), 0.0).unwrap();
    let run = |dt: f64| {
        let mut ic = IntegratorConfig::new(dt, 0.125, VelocityMode::DifferenceQuotientFast).unwrap();
        ic.sample_cadence = Some(1);
        simulate(&s0, &ic).unwrap()
    };
    let coarse = run(2e-3);
    let fine = run(1e-3);
    let mut a_n: f64 = 0.0;
    let mut c_int: f64 = 0.0;
    for phi in &phis {
        for k in 1..=6 {
            let t = 0.02 * k as f64;
            for species in [Species::Rho, Species::Eta] {
                let s2 = weak_form_residual_signed(&coarse, phi, t, species).unwrap();
                let s1 = weak_form_residual_signed(&fine, phi, t, species).unwrap();
                a_n = a_n.max(((4.0 * s1 - s2) / 3.0).abs());
                c_int = c_int.max((s2 - s1).abs() * 4.0 / (3.0 * (2e-3f64).powi(2)));
            }
        }
    }
    let bound = 2.0 * phis.iter().map(|p| p.phi_prime_sup()).fold(0.0, f64::max) / n as f64;
    (a_n, c_int, bound)
}

#[test]
fn c06_weak_form_bound_and_dt_isolation() {
    let _guard = serial();
    let mut parts = Vec::new();
    for &n in &[32usize, 64, 128, 256] {
        let (a_n, c_int, bound) = weak_form_n_part(n);
        assert!(
            a_n <= bound,
            "criterion 06 FAIL: N-part {a_n:e} exceeds 2 |phi'|_inf / N = {bound:e} at n {n}"
        );
        assert!(c_int.is_finite() && c_int > 0.0);
        parts.push((n, a_n, c_int));
    }
    println!(
        "criterion 06 weak-form bound: PASS (N-part vs bound: {})",
        parts
            .iter()
            .map(|(n, a, c)| format!("n={n}: {a:.2e} (C_int {c:.2e})"))
            .collect::<Vec<_>>()
            .join(", ")
    );
}

/// The halving-window sub-check of criterion 6: A_{2N}/A_N in [0.3, 0.7].
/// The measured residual decays like 1/N^2 (ratio ~ 0.25) for every tested
/// family: the exact per-cell integrals cancel the first-order term the
/// window anticipated, so the defect sits a full order below the
/// 2 |phi'|_inf / N bound it accompanies. The assertion is kept as written
/// and fails; its message carries the measured ratios.
#[test]
fn c06_weak_form_n_ratio_window() {
    let _guard = serial();
    let mut a = Vec::new();
    for &n in &[32usize, 64, 128, 256] {
        a.push(weak_form_n_part(n).0);
    }
    let ratios: Vec<f64> = a.windows(2).map(|w| w[1] / w[0]).collect();
    println!("criterion 06 halving ratios (A_2N / A_N): {ratios:?}");
    for r in &ratios {
        assert!(
            (0.3..=0.7).contains(r),
            "criterion 06 FAIL (expected): halving ratio {r:.3} outside [0.3, 0.7]; measured \
             ratios {ratios:?} show the residual decays like 1/N^2, one order better than the \
             documented O(1/N) bound, so the window cannot be met by a faithful \
             measurement"
        );
    }
    println!("criterion 06 halving window: PASS ({ratios:?})");
}

#[test]
fn c07_energy_properties() {
    let _guard = serial();
    let mut rng = StdRng::seed_from_u64(0xE4E6);
    // nonnegativity on 1000 random states of mixed sizes
    let mut min_total = f64::INFINITY;
    for k in 0..1000 {
        let n = [1, 2, 3, 5, 8, 13, 21, 34][k % 8];
        let e = energy_state(&random_state(&mut rng, n)).total;
        min_total = min_total.min(e);
        assert!(e >= -1e-12, "criterion 07 FAIL: energy {e:e} below -1e-12");
    }
    // exact zero for equal configurations
    for _ in 0..20 {
        let p = sorted_positions(&mut rng, 12, -1.5, 1.5);
        let c = SpeciesConfig::new(p).unwrap();
        let s = SystemState::new(c.clone(), c, 0.0).unwrap();
        let e = energy_state(&s).total.abs();
        assert!(e <= 1e-12, "criterion 07 FAIL: equal configs give energy {e:e}");
    }
    // subdifferential vs central finite differences of the atomic energy
    let mut worst_rel: f64 = 0.0;
    for _ in 0..10 {
        let a = sorted_positions(&mut rng, 6, -2.0, 0.5);
        let b = sorted_positions(&mut rng, 6, -0.5, 2.0);
        let mass = 1.0 / 6.0;
        let (ga, gb) = subdifferential_atoms(&a, &b, mass).unwrap();
        let h = 1e-6;
        let mut check = |pos: &[f64], other: &[f64], grad: &[f64], rho_side: bool| {
            for i in 0..pos.len() {
                let mut up = pos.to_vec();
                let mut dn = pos.to_vec();
                up[i] += h;
                dn[i] -= h;
                let (eu, ed) = if rho_side {
                    (
                        energy_atoms(&up, other, mass).unwrap().total,
                        energy_atoms(&dn, other, mass).unwrap().total,
                    )
                } else {
                    (
                        energy_atoms(other, &up, mass).unwrap().total,
                        energy_atoms(other, &dn, mass).unwrap().total,
                    )
                };
                let fd = (eu - ed) / (2.0 * h);
                let exact = mass * grad[i];
                let rel = (fd - exact).abs() / exact.abs().max(1e-8);
                worst_rel = worst_rel.max(rel);
            }
        };
        check(&a, &b, &ga, true);
        check(&b, &a, &gb, false);
    }
    assert!(
        worst_rel <= 1e-6,
        "criterion 07 FAIL: subdifferential vs finite differences rel err {worst_rel:e}"
    );
    println!(
        "criterion 07 energy properties: PASS (min energy {min_total:.2e}, gradient rel err \
         {worst_rel:.2e})"
    );
}

#[test]
fn c08_jko_dissipation_and_ode_comparison() {
    let _guard = serial();
    let start = Instant::now();
    let rho0 = uniform(-1.5, -0.5);
    let eta0 = uniform(0.5, 1.5);
    let n = 16;
    let s0 = SystemState::new(rho0.atomize(n).unwrap(), eta0.atomize(n).unwrap(), 0.0).unwrap();

    let taus = [0.1, 0.05, 0.025, 0.0125];
    for &tau in &taus {
        let cfg = JkoConfig::new(tau, (0.5 / tau).round() as usize).unwrap();
        let flow = jko_flow(&s0, &cfg).unwrap();
        for w in flow.energies.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-10,
                "criterion 08 FAIL: energy rose {} -> {} at tau {tau}",
                w[0],
                w[1]
            );
        }
        let total_cost: f64 = flow.transport_costs.iter().sum();
        let drop = flow.energies[0] - flow.energies.last().unwrap();
        assert!(
            total_cost / (2.0 * tau) <= drop + 1e-8,
            "criterion 08 FAIL: transport bound violated at tau {tau}"
        );
    }

    let icfg = IntegratorConfig::new(1e-3, 0.5, VelocityMode::DifferenceQuotientFast).unwrap();
    let jcfg = JkoConfig::new(0.1, 5).unwrap();
    let rows = compare_to_ode(&s0, 0.5, &taus, &icfg, &jcfg).unwrap();
    for w in rows.windows(2) {
        assert!(
            w[1].1 < w[0].1,
            "criterion 08 FAIL: distance did not decrease with tau: {rows:?}"
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 300.0,
        "criterion 08 runtime {elapsed:?} exceeds 5 min"
    );
    println!(
        "criterion 08 JKO dissipation and ODE comparison: PASS (distances {:?}, {:.1} s)",
        rows.iter().map(|(_, d)| (d * 1e4).round() / 1e4).collect::<Vec<_>>(),
        elapsed.as_secs_f64()
    );
}

#[test]
fn c09_many_particle_cauchy_convergence() {
    let _guard = serial();
    let start = Instant::now();
    let icfg = IntegratorConfig::new(1e-3, 1.0, VelocityMode::DifferenceQuotientFast).unwrap();
    let n_list = [16usize, 32, 64, 128];
    for (name, rho0, eta0) in [
        ("uniform", uniform(-1.5, -0.5), uniform(0.5, 1.5)),
        ("tent", tent(-1.0, 0.7), tent(1.0, 0.7)),
    ] {
        let rows = convergence_study(&rho0, &eta0, &n_list, &icfg).unwrap();
        for w in rows.windows(2) {
            assert!(
                w[1].1 < w[0].1,
                "criterion 09 FAIL ({name}): distances not strictly decreasing: {rows:?}"
            );
        }
        println!(
            "criterion 09 {name}: distances {:?}",
            rows.iter().map(|(n, d)| format!("{n}: {d:.2e}")).collect::<Vec<_>>()
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 600.0,
        "criterion 09 runtime {elapsed:?} exceeds 10 min"
    );
    println!(
        "criterion 09 many-particle Cauchy convergence: PASS ({:.1} s)",
        elapsed.as_secs_f64()
    );
}

#[test]
fn c10_stability_analog() {
    let _guard = serial();
    let rho0 = uniform(-1.5, -0.5);
    let eta0 = uniform(0.5, 1.5);
    let n = 32;
    let base = SystemState::new(rho0.atomize(n).unwrap(), eta0.atomize(n).unwrap(), 0.0).unwrap();
    let icfg = IntegratorConfig::new(1e-3, 2.0, VelocityMode::DifferenceQuotientFast).unwrap();

    let mut rng = StdRng::seed_from_u64(0x57AB);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let perturbed = perturbed_state(&base, 1e-3, &mut rng).unwrap();
        let r = stability_experiment(&base, &perturbed, &icfg).unwrap();
        worst = worst.max(r);
    }
    assert!(
        worst <= 1.05,
        "criterion 10 FAIL: perturbation ratio {worst} above 1.05"
    );

    let translated = base.translated(1e-3);
    let r = stability_experiment(&base, &translated, &icfg).unwrap();
    assert!(
        r <= 1.0 + 1e-12,
        "criterion 10 FAIL: translation pair ratio {r} above 1"
    );
    println!(
        "criterion 10 stability analog: PASS (worst perturbation ratio {worst:.4}, translation \
         ratio {r:.12})"
    );
}

#[test]
fn c11_performance() {
    let _guard = serial();
    let mut rng = StdRng::seed_from_u64(0xBE9C);
    let once = |s: &SystemState, mode: VelocityMode| -> f64 {
        let t = Instant::now();
        let v = match mode {
            VelocityMode::DifferenceQuotientNaive => velocity_naive(s),
            VelocityMode::DifferenceQuotientFast => velocity_fast(s),
            VelocityMode::ClassicalPointwise => velocity_classical(s),
        };
        let dt = t.elapsed().as_secs_f64();
        std::hint::black_box(&v);
        dt
    };
    // the RHS is always called in bursts (four stages per step), so the
    // relevant cost is the per-call time of a batch; interleaving the two
    // sizes and taking the best batch screens out scheduler spikes
    let interleaved = |a: &SystemState,
                       b: &SystemState,
                       mode: VelocityMode,
                       batch: usize,
                       rounds: usize| {
        let mut best = (f64::INFINITY, f64::INFINITY);
        for _ in 0..rounds {
            let t = Instant::now();
            for _ in 0..batch {
                once(a, mode);
            }
            best.0 = best.0.min(t.elapsed().as_secs_f64() / batch as f64);
            let t = Instant::now();
            for _ in 0..batch {
                once(b, mode);
            }
            best.1 = best.1.min(t.elapsed().as_secs_f64() / batch as f64);
        }
        best
    };

    let s13 = random_state(&mut rng, 1 << 13);
    let s14 = random_state(&mut rng, 1 << 14);
    // warm the thread pool, caches, and the allocator's large-chunk reuse
    for _ in 0..8 {
        let _ = velocity_fast(&s13);
        let _ = velocity_fast(&s14);
    }
    let _ = velocity_naive(&s14);

    let (fast13, fast14) =
        interleaved(&s13, &s14, VelocityMode::DifferenceQuotientFast, 10, 5);
    let (naive13, naive14) =
        interleaved(&s13, &s14, VelocityMode::DifferenceQuotientNaive, 1, 3);
    let fast_ratio = fast14 / fast13;
    let naive_ratio = naive14 / naive13;
    assert!(
        fast_ratio <= 2.5,
        "criterion 11 FAIL: fast-mode doubling ratio {fast_ratio:.2}"
    );
    assert!(
        naive_ratio >= 3.2,
        "criterion 11 FAIL: naive-mode doubling ratio {naive_ratio:.2}"
    );

    let s_big = random_state(&mut rng, 100_000);
    let fast_big = (0..3)
        .map(|_| once(&s_big, VelocityMode::DifferenceQuotientFast))
        .fold(f64::INFINITY, f64::min);
    println!(
        "criterion 11 performance: PASS (fast ratio {fast_ratio:.2}, naive ratio \
         {naive_ratio:.2}, fast RHS at N = 1e5 in {:.1} ms)",
        fast_big * 1e3
    );
}

#[test]
fn c12_determinism() {
    let _guard = serial();
    let cases = [
        (
            "simulate",
            "experiment = simulate\nn = 12\nrho0.kind = uniform\nrho0.a = -1.5\nrho0.b = -0.5\n\
             eta0.kind = uniform\neta0.a = 0.5\neta0.b = 1.5\nintegrator.dt = 1e-3\n\
             integrator.t_end = 0.25\n",
        ),
        (
            "jko",
            "experiment = jko\nn = 8\nrho0.kind = uniform\nrho0.a = -1.5\nrho0.b = -0.5\n\
             eta0.kind = tent\neta0.center = 1.0\neta0.halfwidth = 0.5\njko.tau = 0.05\n\
             jko.n_steps = 4\n",
        ),
        (
            "converge",
            "experiment = converge\nn_list = 8, 16\nrho0.kind = uniform\nrho0.a = -1.5\n\
             rho0.b = -0.5\neta0.kind = uniform\neta0.a = 0.5\neta0.b = 1.5\n\
             integrator.dt = 5e-3\nintegrator.t_end = 0.25\n",
        ),
        (
            "stability",
            "experiment = stability\nseed = 7\nn = 8\nrho0.kind = uniform\nrho0.a = -1.5\n\
             rho0.b = -0.5\neta0.kind = uniform\neta0.a = 0.5\neta0.b = 1.5\n\
             integrator.dt = 5e-3\nintegrator.t_end = 0.25\nstability.trials = 3\n",
        ),
    ];
    for (name, text) in cases {
        let cfg = parse_config_text(text, std::path::Path::new(".")).unwrap();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let sum_a = run(&cfg, dir_a.path()).unwrap();
        let sum_b = run(&cfg, dir_b.path()).unwrap();
        assert!(sum_a.all_contracts_pass(), "criterion 12: {name} contracts failed");
        let mut files = sum_a.outputs.clone();
        files.sort();
        files.dedup();
        assert_eq!(files, {
            let mut f = sum_b.outputs.clone();
            f.sort();
            f.dedup();
            f
        });
        for f in &files {
            let a = std::fs::read(dir_a.path().join(f)).unwrap();
            let b = std::fs::read(dir_b.path().join(f)).unwrap();
            assert_eq!(a, b, "criterion 12 FAIL: {name}/{f} differs between reruns");
        }
    }
    println!("criterion 12 determinism: PASS (byte-identical outputs over 4 experiments)");
}
