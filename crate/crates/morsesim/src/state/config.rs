//! Particle positions of one species and the two-species system state.

use crate::error::{Error, Result};

/// Strictly increasing positions of N+1 particles of one species.
///
/// Only the N gaps between consecutive particles carry mass, 1/N each, so
/// the configuration encodes a probability density (see
/// [`PiecewiseDensity::from_config`](super::PiecewiseDensity::from_config)).
#[derive(Clone, Debug, PartialEq)]
pub struct SpeciesConfig {
    positions: Vec<f64>,
}

impl SpeciesConfig {
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::TooFewParticles(positions.len()));
        }
        if !positions[0].is_finite() {
            return Err(Error::PositionsNotIncreasing { index: 0 });
        }
        for i in 1..positions.len() {
            if !positions[i].is_finite() || positions[i] <= positions[i - 1] {
                return Err(Error::PositionsNotIncreasing { index: i });
            }
        }
        Ok(Self { positions })
    }

    /// Number of mass-carrying gaps.
    pub fn n(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Gap d_k = x_{k+1} - x_k.
    pub fn gap(&self, k: usize) -> f64 {
        self.positions[k + 1] - self.positions[k]
    }

    pub fn min_gap(&self) -> f64 {
        (0..self.n()).map(|k| self.gap(k)).fold(f64::INFINITY, f64::min)
    }

    pub fn translated(&self, c: f64) -> Self {
        Self {
            positions: self.positions.iter().map(|x| x + c).collect(),
        }
    }

    /// Reflection about the origin; positions are negated and reversed.
    pub fn mirrored(&self) -> Self {
        Self {
            positions: self.positions.iter().rev().map(|x| -x).collect(),
        }
    }
}

/// Both species plus the simulation clock.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    rho: SpeciesConfig,
    eta: SpeciesConfig,
    time: f64,
}

impl SystemState {
    pub fn new(rho: SpeciesConfig, eta: SpeciesConfig, time: f64) -> Result<Self> {
        if rho.n() != eta.n() {
            return Err(Error::SpeciesSizeMismatch {
                rho: rho.n(),
                eta: eta.n(),
            });
        }
        if !time.is_finite() || time < 0.0 {
            return Err(Error::InvalidTime(time));
        }
        Ok(Self { rho, eta, time })
    }

    pub fn rho(&self) -> &SpeciesConfig {
        &self.rho
    }

    pub fn eta(&self) -> &SpeciesConfig {
        &self.eta
    }

    pub fn n(&self) -> usize {
        self.rho.n()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(&self, time: f64) -> Self {
        Self {
            rho: self.rho.clone(),
            eta: self.eta.clone(),
            time,
        }
    }

    pub fn translated(&self, c: f64) -> Self {
        Self {
            rho: self.rho.translated(c),
            eta: self.eta.translated(c),
            time: self.time,
        }
    }

    /// Mirror x -> -x: species keep their roles, each configuration is
    /// negated and reversed.
    pub fn mirrored(&self) -> Self {
        Self {
            rho: self.rho.mirrored(),
            eta: self.eta.mirrored(),
            time: self.time,
        }
    }
}
