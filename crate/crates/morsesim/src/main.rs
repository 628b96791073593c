use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use morsesim::cli::{parse_config, run, Experiment, RunConfig};

/// Particle-scheme simulator and analysis harness for the two-species
/// Morse interaction system.
#[derive(Parser)]
#[command(name = "morsesim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration file (key = value lines)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed override for randomized experiments
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the particle ODE system and record diagnostics
    Simulate(RunArgs),
    /// Run the minimizing-movement reference solver
    Jko(RunArgs),
    /// Cauchy convergence study over a list of particle counts
    Converge(RunArgs),
    /// Seeded perturbation stability experiment
    Stability(RunArgs),
    /// The two-plus-two opposite-species mixing demonstration
    CollisionDemo(RunArgs),
    /// Kernel evaluation self-checks
    KernelSelftest(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::Simulate(a) => (Experiment::Simulate, a),
        Command::Jko(a) => (Experiment::Jko, a),
        Command::Converge(a) => (Experiment::Converge, a),
        Command::Stability(a) => (Experiment::Stability, a),
        Command::CollisionDemo(a) => (Experiment::CollisionDemo, a),
        Command::KernelSelftest(a) => (Experiment::KernelSelftest, a),
    };

    let cfg = match load_config(experiment, args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };

    match run(&cfg, &args.out) {
        Ok(summary) => {
            for (k, v) in &summary.entries {
                println!("{k}={v}");
            }
            for (name, ok) in &summary.contracts {
                println!("contract.{name}={}", if *ok { "pass" } else { "fail" });
            }
            if summary.all_contracts_pass() {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: at least one contract failed (see summary.txt)");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(experiment: Experiment, args: &RunArgs) -> morsesim::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let cfg = parse_config(path)?;
            if cfg.experiment != experiment {
                return Err(morsesim::Error::Config(format!(
                    "config declares experiment {:?} but the {:?} subcommand was invoked",
                    cfg.experiment.name(),
                    experiment.name()
                )));
            }
            cfg
        }
        None => RunConfig::defaults(experiment)?,
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}
