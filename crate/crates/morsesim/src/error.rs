//! Crate-wide error type and result alias.

use thiserror::Error;

/// Which of the two species a message refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Species {
    Rho,
    Eta,
}

impl std::fmt::Display for Species {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Species::Rho => write!(f, "rho"),
            Species::Eta => write!(f, "eta"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    // ---- kernel ----
    #[error("non-finite input to kernel evaluation: {0}")]
    NonFinite(f64),
    #[error("interval endpoints out of order: a = {a}, b = {b}")]
    EmptyInterval { a: f64, b: f64 },

    // ---- state ----
    #[error("a species needs at least 2 particle positions, got {0}")]
    TooFewParticles(usize),
    #[error("positions must be finite and strictly increasing (violated at index {index})")]
    PositionsNotIncreasing { index: usize },
    #[error("species sizes differ: rho has {rho} gaps, eta has {eta}")]
    SpeciesSizeMismatch { rho: usize, eta: usize },
    #[error("invalid time value: {0}")]
    InvalidTime(f64),
    #[error("invalid piecewise density: {0}")]
    InvalidDensity(String),
    #[error("invalid CDF table: {0}")]
    InvalidCdf(String),
    #[error("L^p exponent must lie in (1, inf], got {0}")]
    BadExponent(f64),
    #[error("atomization produced coincident particles at index {index} (atom of mass >= 1/N)")]
    AtomizationStrictness { index: usize },

    // ---- dynamics ----
    #[error(
        "step rejected {halvings} times at t = {time}: {species} gap {gap_index} fell below the gap floor"
    )]
    Stiffness {
        time: f64,
        species: Species,
        gap_index: usize,
        halvings: u32,
    },

    // ---- energy ----
    #[error("coincident same-species atoms at indices {i} and {j}")]
    CoincidentAtoms { i: usize, j: usize },
    #[error("invalid atomic configuration: {0}")]
    InvalidAtoms(String),

    // ---- jko ----
    #[error("JKO inner solve failed at outer step {step}: {detail}")]
    OptimizationFailure { step: usize, detail: String },
    #[error("invalid solver parameter {name} = {value}")]
    BadParameter { name: &'static str, value: f64 },

    // ---- analysis ----
    #[error("time {0} is not a stored sample of the trajectory")]
    SampleNotFound(f64),
    #[error("stability ratio undefined: the two initial states coincide")]
    ZeroInitialDistance,
    #[error("moment fit needs m2(0) > 0 and at least 3 samples")]
    DegenerateMoment,

    // ---- cli ----
    #[error("config error: {0}")]
    Config(String),
    #[error("contract violated: {0}")]
    ContractViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status class: 1 contract violation, 2 configuration, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ContractViolation(_) => 1,
            Error::Config(_)
            | Error::Io(_)
            | Error::InvalidCdf(_)
            | Error::BadExponent(_)
            | Error::BadParameter { .. } => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
