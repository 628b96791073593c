//! Experiment suite: the quantitative consistency checks as reusable
//! operations over trajectories.

mod experiments;
mod test_function;

pub use experiments::{
    convergence_study, kernel_selftest, lp_growth_check, moment_growth, perturbed_state,
    phi_moment, stability_experiment, weak_form_residual, weak_form_residual_signed, MomentFit,
    SelfTestItem,
};
pub use test_function::TestFunction;
