//! Flat key/value run configuration with a strict per-experiment schema.
//!
//! Syntax: one `key = value` per line, '#' comments, blank lines ignored.
//! Unknown keys are rejected with a nearest-key suggestion; physics-relevant
//! fields have no silent defaults.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::dynamics::{IntegratorConfig, VelocityMode};
use crate::error::{Error, Result};
use crate::jko::JkoConfig;
use crate::state::{CdfTable, InitialDensity, PiecewiseDensity};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Simulate,
    Jko,
    Converge,
    Stability,
    CollisionDemo,
    KernelSelftest,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Jko => "jko",
            Experiment::Converge => "converge",
            Experiment::Stability => "stability",
            Experiment::CollisionDemo => "collision-demo",
            Experiment::KernelSelftest => "kernel-selftest",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Ok(match s {
            "simulate" => Experiment::Simulate,
            "jko" => Experiment::Jko,
            "converge" => Experiment::Converge,
            "stability" => Experiment::Stability,
            "collision-demo" => Experiment::CollisionDemo,
            "kernel-selftest" => Experiment::KernelSelftest,
            other => {
                return Err(Error::Config(format!(
                    "experiment: unknown value {other:?} (one of simulate, jko, converge, \
                     stability, collision-demo, kernel-selftest)"
                )))
            }
        })
    }
}

/// A fully validated run description.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub n: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub rho0: Option<InitialDensity>,
    pub eta0: Option<InitialDensity>,
    pub integrator: Option<IntegratorConfig>,
    pub jko: Option<JkoConfig>,
    pub stability_epsilon: f64,
    pub stability_trials: usize,
    /// SHA-256 of the raw config text, recorded in the manifest
    pub config_hash: String,
}

impl RunConfig {
    /// Built-in defaults for the experiments that can run without a file.
    pub fn defaults(experiment: Experiment) -> Result<Self> {
        match experiment {
            Experiment::KernelSelftest | Experiment::CollisionDemo => {
                let integrator = IntegratorConfig::new(
                    1e-3,
                    10.0,
                    VelocityMode::DifferenceQuotientFast,
                )?;
                Ok(RunConfig {
                    experiment,
                    seed: 0,
                    n: None,
                    n_list: None,
                    rho0: None,
                    eta0: None,
                    integrator: Some(integrator),
                    jko: None,
                    stability_epsilon: 1e-3,
                    stability_trials: 10,
                    config_hash: hash_text(""),
                })
            }
            other => Err(Error::Config(format!(
                "experiment {:?} needs a config file (--config)",
                other.name()
            ))),
        }
    }
}

const KEYS: &[&str] = &[
    "experiment",
    "seed",
    "n",
    "n_list",
    "rho0.kind",
    "rho0.a",
    "rho0.b",
    "rho0.center",
    "rho0.halfwidth",
    "rho0.path",
    "eta0.kind",
    "eta0.a",
    "eta0.b",
    "eta0.center",
    "eta0.halfwidth",
    "eta0.path",
    "integrator.dt",
    "integrator.t_end",
    "integrator.mode",
    "integrator.gap_floor",
    "integrator.max_step_halvings",
    "integrator.sample_cadence",
    "jko.tau",
    "jko.n_steps",
    "jko.inner_tol",
    "jko.inner_max_iters",
    "jko.step_init",
    "jko.step_shrink",
    "jko.sufficient_decrease",
    "stability.epsilon",
    "stability.trials",
];

fn allowed_keys(experiment: Experiment) -> Vec<&'static str> {
    let mut keys = vec!["experiment", "seed"];
    let initial = |keys: &mut Vec<&'static str>| {
        keys.extend(KEYS.iter().filter(|k| k.starts_with("rho0.") || k.starts_with("eta0.")));
    };
    let integ = |keys: &mut Vec<&'static str>| {
        keys.extend(KEYS.iter().filter(|k| k.starts_with("integrator.")));
    };
    match experiment {
        Experiment::Simulate => {
            keys.push("n");
            initial(&mut keys);
            integ(&mut keys);
        }
        Experiment::Jko => {
            keys.push("n");
            initial(&mut keys);
            keys.extend(KEYS.iter().filter(|k| k.starts_with("jko.")));
        }
        Experiment::Converge => {
            keys.push("n_list");
            initial(&mut keys);
            integ(&mut keys);
        }
        Experiment::Stability => {
            keys.push("n");
            initial(&mut keys);
            integ(&mut keys);
            keys.extend(KEYS.iter().filter(|k| k.starts_with("stability.")));
        }
        Experiment::CollisionDemo => {
            integ(&mut keys);
        }
        Experiment::KernelSelftest => {}
    }
    keys
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text, path.parent().unwrap_or(Path::new(".")))
}

pub fn parse_config_text(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let entries = split_entries(text)?;
    let experiment = Experiment::from_name(
        entries
            .get("experiment")
            .ok_or_else(|| Error::Config("missing required key: experiment".into()))?,
    )?;

    let allowed = allowed_keys(experiment);
    for key in entries.keys() {
        if !allowed.contains(&key.as_str()) {
            let msg = if KEYS.contains(&key.as_str()) {
                format!("key {key:?} is not used by experiment {}", experiment.name())
            } else {
                let mut m = format!("unknown key {key:?}");
                if let Some(s) = suggest(key, KEYS) {
                    m.push_str(&format!(" (did you mean {s:?}?)"));
                }
                m
            };
            return Err(Error::Config(msg));
        }
    }

    let get = |key: &str| entries.get(key).map(String::as_str);
    let seed = parse_opt(get("seed"), "seed", |s| s.parse::<u64>().ok())?.unwrap_or(0);
    let n = parse_opt(get("n"), "n", |s| s.parse::<usize>().ok())?;
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::Config("n: must be at least 1".into()));
        }
    }
    let n_list = match get("n_list") {
        None => None,
        Some(raw) => {
            let mut out = Vec::new();
            for piece in raw.split(',') {
                let v: usize = piece.trim().parse().map_err(|_| {
                    Error::Config(format!("n_list: bad entry {:?}", piece.trim()))
                })?;
                if v == 0 {
                    return Err(Error::Config("n_list: entries must be at least 1".into()));
                }
                out.push(v);
            }
            if out.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config("n_list: must be strictly increasing".into()));
            }
            Some(out)
        }
    };

    let rho0 = parse_initial(&entries, "rho0", base_dir)?;
    let eta0 = parse_initial(&entries, "eta0", base_dir)?;
    let integrator = parse_integrator(&entries, experiment)?;
    let jko = parse_jko(&entries, experiment)?;

    let stability_epsilon =
        parse_opt(get("stability.epsilon"), "stability.epsilon", |s| s.parse().ok())?
            .unwrap_or(1e-3);
    if !(stability_epsilon > 0.0) {
        return Err(Error::Config("stability.epsilon: must be positive".into()));
    }
    let stability_trials =
        parse_opt(get("stability.trials"), "stability.trials", |s| s.parse().ok())?.unwrap_or(10);

    // per-experiment required fields
    let need = |cond: bool, what: &str| -> Result<()> {
        if cond {
            Ok(())
        } else {
            Err(Error::Config(format!("missing required key: {what}")))
        }
    };
    match experiment {
        Experiment::Simulate | Experiment::Stability => {
            need(n.is_some(), "n")?;
            need(rho0.is_some(), "rho0.kind")?;
            need(eta0.is_some(), "eta0.kind")?;
            need(integrator.is_some(), "integrator.dt / integrator.t_end")?;
        }
        Experiment::Jko => {
            need(n.is_some(), "n")?;
            need(rho0.is_some(), "rho0.kind")?;
            need(eta0.is_some(), "eta0.kind")?;
            need(jko.is_some(), "jko.tau / jko.n_steps")?;
        }
        Experiment::Converge => {
            need(n_list.is_some(), "n_list")?;
            need(rho0.is_some(), "rho0.kind")?;
            need(eta0.is_some(), "eta0.kind")?;
            need(integrator.is_some(), "integrator.dt / integrator.t_end")?;
        }
        Experiment::CollisionDemo | Experiment::KernelSelftest => {}
    }

    Ok(RunConfig {
        experiment,
        seed,
        n,
        n_list,
        rho0,
        eta0,
        integrator: match (experiment, integrator) {
            // collision-demo falls back to its documented defaults
            (Experiment::CollisionDemo, None) => {
                Some(IntegratorConfig::new(1e-3, 10.0, VelocityMode::DifferenceQuotientFast)?)
            }
            (_, other) => other,
        },
        jko,
        stability_epsilon,
        stability_trials,
        config_hash: hash_text(text),
    })
}

fn split_entries(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (ln, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected 'key = value', got {body:?}",
                ln + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Config(format!("line {}: empty key or value", ln + 1)));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {key:?}", ln + 1)));
        }
    }
    Ok(map)
}

fn parse_opt<T>(raw: Option<&str>, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
    match raw {
        None => Ok(None),
        Some(s) => f(s)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("{key}: bad value {s:?}"))),
    }
}

fn parse_initial(
    entries: &BTreeMap<String, String>,
    prefix: &str,
    base_dir: &Path,
) -> Result<Option<InitialDensity>> {
    let get = |field: &str| entries.get(&format!("{prefix}.{field}")).map(String::as_str);
    let Some(kind) = get("kind") else {
        // reject stray sub-keys without a kind
        for field in ["a", "b", "center", "halfwidth", "path"] {
            if get(field).is_some() {
                return Err(Error::Config(format!(
                    "{prefix}.{field} given without {prefix}.kind"
                )));
            }
        }
        return Ok(None);
    };
    let req_f64 = |field: &str| -> Result<f64> {
        let key = format!("{prefix}.{field}");
        let raw = get(field).ok_or_else(|| Error::Config(format!("missing required key: {key}")))?;
        raw.parse::<f64>()
            .map_err(|_| Error::Config(format!("{key}: bad value {raw:?}")))
    };
    let density = match kind {
        "uniform" => InitialDensity::uniform(req_f64("a")?, req_f64("b")?)
            .map_err(|e| Error::Config(format!("{prefix}: {e}")))?,
        "tent" => {
            let table = CdfTable::tent(req_f64("center")?, req_f64("halfwidth")?, 2048)
                .map_err(|e| Error::Config(format!("{prefix}: {e}")))?;
            InitialDensity::Cdf(table)
        }
        "cdf_file" | "density_file" => {
            let key = format!("{prefix}.path");
            let raw = get("path")
                .ok_or_else(|| Error::Config(format!("missing required key: {key}")))?;
            let path = resolve(base_dir, raw);
            let file = fs::File::open(&path)
                .map_err(|e| Error::Config(format!("{key}: cannot open {}: {e}", path.display())))?;
            let reader = BufReader::new(file);
            if kind == "cdf_file" {
                InitialDensity::Cdf(
                    CdfTable::parse(reader).map_err(|e| Error::Config(format!("{key}: {e}")))?,
                )
            } else {
                InitialDensity::Density(
                    PiecewiseDensity::read_table(reader)
                        .map_err(|e| Error::Config(format!("{key}: {e}")))?,
                )
            }
        }
        other => {
            return Err(Error::Config(format!(
                "{prefix}.kind: unknown value {other:?} (one of uniform, tent, cdf_file, \
                 density_file)"
            )))
        }
    };
    Ok(Some(density))
}

fn resolve(base_dir: &Path, raw: &str) -> PathBuf {
    let p = Path::new(raw);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

fn parse_integrator(
    entries: &BTreeMap<String, String>,
    _experiment: Experiment,
) -> Result<Option<IntegratorConfig>> {
    let get = |key: &str| entries.get(key).map(String::as_str);
    let dt = parse_opt(get("integrator.dt"), "integrator.dt", |s| s.parse::<f64>().ok())?;
    let t_end = parse_opt(get("integrator.t_end"), "integrator.t_end", |s| s.parse::<f64>().ok())?;
    let (Some(dt), Some(t_end)) = (dt, t_end) else {
        if dt.is_some() != t_end.is_some() {
            return Err(Error::Config(
                "integrator.dt and integrator.t_end must be given together".into(),
            ));
        }
        for key in [
            "integrator.mode",
            "integrator.gap_floor",
            "integrator.max_step_halvings",
            "integrator.sample_cadence",
        ] {
            if get(key).is_some() {
                return Err(Error::Config(format!(
                    "{key} given without integrator.dt / integrator.t_end"
                )));
            }
        }
        return Ok(None);
    };
    let mode = match get("integrator.mode") {
        None | Some("fast") => VelocityMode::DifferenceQuotientFast,
        Some("naive") => VelocityMode::DifferenceQuotientNaive,
        Some("classical") => VelocityMode::ClassicalPointwise,
        Some(other) => {
            return Err(Error::Config(format!(
                "integrator.mode: unknown value {other:?} (one of fast, naive, classical)"
            )))
        }
    };
    let mut cfg = IntegratorConfig::new(dt, t_end, mode)
        .map_err(|e| Error::Config(format!("integrator: {e}")))?;
    if let Some(gf) = parse_opt(get("integrator.gap_floor"), "integrator.gap_floor", |s| {
        s.parse::<f64>().ok()
    })? {
        if !(gf > 0.0) {
            return Err(Error::Config("integrator.gap_floor: must be positive".into()));
        }
        cfg.gap_floor = gf;
    }
    if let Some(mh) = parse_opt(
        get("integrator.max_step_halvings"),
        "integrator.max_step_halvings",
        |s| s.parse::<u32>().ok(),
    )? {
        cfg.max_step_halvings = mh;
    }
    cfg.sample_cadence = parse_opt(
        get("integrator.sample_cadence"),
        "integrator.sample_cadence",
        |s| s.parse::<usize>().ok(),
    )?;
    Ok(Some(cfg))
}

fn parse_jko(entries: &BTreeMap<String, String>, _experiment: Experiment) -> Result<Option<JkoConfig>> {
    let get = |key: &str| entries.get(key).map(String::as_str);
    let tau = parse_opt(get("jko.tau"), "jko.tau", |s| s.parse::<f64>().ok())?;
    let n_steps = parse_opt(get("jko.n_steps"), "jko.n_steps", |s| s.parse::<usize>().ok())?;
    let (Some(tau), Some(n_steps)) = (tau, n_steps) else {
        if tau.is_some() != n_steps.is_some() {
            return Err(Error::Config("jko.tau and jko.n_steps must be given together".into()));
        }
        return Ok(None);
    };
    let mut cfg = JkoConfig::new(tau, n_steps).map_err(|e| Error::Config(format!("jko: {e}")))?;
    if let Some(v) = parse_opt(get("jko.inner_tol"), "jko.inner_tol", |s| s.parse().ok())? {
        cfg.inner_tol = v;
    }
    if let Some(v) = parse_opt(get("jko.inner_max_iters"), "jko.inner_max_iters", |s| {
        s.parse().ok()
    })? {
        cfg.inner_max_iters = v;
    }
    if let Some(v) = parse_opt(get("jko.step_init"), "jko.step_init", |s| s.parse().ok())? {
        cfg.step_init = v;
    }
    if let Some(v) = parse_opt(get("jko.step_shrink"), "jko.step_shrink", |s| s.parse().ok())? {
        cfg.step_shrink = v;
    }
    if let Some(v) = parse_opt(
        get("jko.sufficient_decrease"),
        "jko.sufficient_decrease",
        |s| s.parse().ok(),
    )? {
        cfg.sufficient_decrease = v;
    }
    Ok(Some(cfg))
}

fn hash_text(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Nearest known key by edit distance, if close enough to be a typo.
fn suggest(key: &str, vocab: &[&'static str]) -> Option<&'static str> {
    vocab
        .iter()
        .map(|k| (levenshtein(key, k), *k))
        .min()
        .filter(|(d, _)| *d <= 3)
        .map(|(_, k)| k)
}

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
experiment = simulate
n = 16
rho0.kind = uniform
rho0.a = -1.5
rho0.b = -0.5
eta0.kind = uniform
eta0.a = 0.5
eta0.b = 1.5
integrator.dt = 1e-3
integrator.t_end = 1.0
";

    #[test]
    fn minimal_simulate_config_parses() {
        let cfg = parse_config_text(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(cfg.experiment, Experiment::Simulate);
        assert_eq!(cfg.n, Some(16));
        assert!(cfg.rho0.is_some() && cfg.eta0.is_some());
        let ic = cfg.integrator.unwrap();
        assert_eq!(ic.dt, 1e-3);
        assert_eq!(ic.t_end, 1.0);
        assert_eq!(ic.gap_floor, 1e-12);
        assert_eq!(ic.max_step_halvings, 40);
    }

    #[test]
    fn negative_dt_names_the_key() {
        let bad = MINIMAL.replace("integrator.dt = 1e-3", "integrator.dt = -1e-3");
        let e = parse_config_text(&bad, Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("integrator.dt"), "{e}");
    }

    #[test]
    fn unknown_key_suggests_the_nearest() {
        let bad = MINIMAL.replace("integrator.dt", "integrater.dt");
        let e = parse_config_text(&bad, Path::new(".")).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("integrater.dt"), "{msg}");
        assert!(msg.contains("integrator.dt"), "{msg}");
    }

    #[test]
    fn missing_required_keys_are_reported() {
        let bad = MINIMAL.replace("n = 16\n", "");
        let e = parse_config_text(&bad, Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("missing required key: n"), "{e}");
    }

    #[test]
    fn keys_outside_the_experiment_schema_are_rejected() {
        let bad = format!("{MINIMAL}jko.tau = 0.1\n");
        let e = parse_config_text(&bad, Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("jko.tau"), "{e}");
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let bad = format!("{MINIMAL}n = 8\n");
        let e = parse_config_text(&bad, Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("duplicate"), "{e}");
    }

    #[test]
    fn tent_and_nlist_parse() {
        let text = "\
experiment = converge
n_list = 16, 32, 64
rho0.kind = tent
rho0.center = -1.0
rho0.halfwidth = 0.5
eta0.kind = uniform
eta0.a = 0.5
eta0.b = 1.5
integrator.dt = 1e-2
integrator.t_end = 0.5
";
        let cfg = parse_config_text(text, Path::new(".")).unwrap();
        assert_eq!(cfg.n_list, Some(vec![16, 32, 64]));
        assert!(matches!(cfg.rho0, Some(InitialDensity::Cdf(_))));
    }

    #[test]
    fn hash_is_stable_and_text_sensitive() {
        let a = parse_config_text(MINIMAL, Path::new(".")).unwrap();
        let b = parse_config_text(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(a.config_hash, b.config_hash);
        let c = parse_config_text(&format!("{MINIMAL}seed = 1\n"), Path::new(".")).unwrap();
        assert_ne!(a.config_hash, c.config_hash);
    }
}
