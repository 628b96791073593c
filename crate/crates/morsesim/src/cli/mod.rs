//! Configuration parsing and experiment orchestration for the command-line
//! front end.

mod config;
mod run;

pub use config::{parse_config, parse_config_text, Experiment, RunConfig};
pub use run::{run, RunSummary};
