//! Particle configurations, piecewise-constant density reconstruction,
//! atomization of initial data, and 1-D measure diagnostics.

mod config;
mod density;
mod initial;
mod metric;

pub use config::{SpeciesConfig, SystemState};
pub use density::PiecewiseDensity;
pub use initial::{CdfTable, InitialDensity};
pub use metric::{product_w2, product_w2_cross, w2_atoms, w2_atoms_pairing, w2_density};
pub(crate) use metric::w2_positions_sq;

pub use crate::error::Species;
