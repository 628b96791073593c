//! Deterministic particle solver, JKO reference solver, and analysis
//! harness for a one-dimensional two-species system with repulsive
//! self-interaction and attractive cross-interaction of Morse type.
//!
//! The particle scheme replaces the kernel derivative with exact mean
//! slopes over inter-particle gaps, which is algebraically the same as
//! convolving W' against the piecewise-constant reconstructed densities.
//! That identity, and most of the quantitative claims that come with it
//! (same-species non-collision, L^p growth, weak-form consistency,
//! W2 stability), are wired into the test and experiment suites.

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod jko;
pub mod kernel;
pub mod state;
mod sweep;
mod util;

pub use error::{Error, Result, Species};
