//! Piecewise-constant probability densities and their diagnostics.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::util::neumaier_sum;

use super::SpeciesConfig;

const MASS_TOL: f64 = 1e-12;

/// A nonnegative step function with unit mass: `heights[k]` on
/// `[breakpoints[k], breakpoints[k+1])`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseDensity {
    breakpoints: Vec<f64>,
    heights: Vec<f64>,
}

impl PiecewiseDensity {
    pub fn new(breakpoints: Vec<f64>, heights: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || heights.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidDensity(format!(
                "{} breakpoints with {} heights",
                breakpoints.len(),
                heights.len()
            )));
        }
        for i in 0..breakpoints.len() {
            if !breakpoints[i].is_finite() || (i > 0 && breakpoints[i] <= breakpoints[i - 1]) {
                return Err(Error::InvalidDensity(format!(
                    "breakpoints must be finite and strictly increasing (index {i})"
                )));
            }
        }
        if heights.iter().any(|h| !h.is_finite() || *h < 0.0) {
            return Err(Error::InvalidDensity("negative or non-finite height".into()));
        }
        let d = Self {
            breakpoints,
            heights,
        };
        let mass = d.mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDensity(format!("total mass {mass} is not 1")));
        }
        Ok(d)
    }

    /// The reconstruction rho^N of a particle configuration: mass 1/N on
    /// each gap, so heights are 1/(N d_k).
    pub fn from_config(cfg: &SpeciesConfig) -> Self {
        let n = cfg.n() as f64;
        let breakpoints = cfg.positions().to_vec();
        let heights = (0..cfg.n()).map(|k| 1.0 / (n * cfg.gap(k))).collect();
        Self {
            breakpoints,
            heights,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn num_cells(&self) -> usize {
        self.heights.len()
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    pub fn mass(&self) -> f64 {
        neumaier_sum(
            (0..self.num_cells())
                .map(|k| self.heights[k] * (self.breakpoints[k + 1] - self.breakpoints[k])),
        )
    }

    /// Cumulative masses at the breakpoints, rescaled so the last entry is
    /// exactly 1.
    pub fn cumulative_masses(&self) -> Vec<f64> {
        let mut cum = Vec::with_capacity(self.breakpoints.len());
        let mut sum = 0.0;
        let mut comp = 0.0;
        cum.push(0.0);
        for k in 0..self.num_cells() {
            let t = self.heights[k] * (self.breakpoints[k + 1] - self.breakpoints[k]);
            let s = sum + t;
            if sum.abs() >= t.abs() {
                comp += (sum - s) + t;
            } else {
                comp += (t - s) + sum;
            }
            sum = s;
            cum.push(sum + comp);
        }
        let total = *cum.last().unwrap();
        for c in cum.iter_mut() {
            *c /= total;
        }
        *cum.last_mut().unwrap() = 1.0;
        cum
    }

    /// L^p norm for p in (1, inf]; pass `f64::INFINITY` for the sup norm.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p <= 1.0 {
            return Err(Error::BadExponent(p));
        }
        if p == f64::INFINITY {
            return Ok(self.heights.iter().cloned().fold(0.0, f64::max));
        }
        let sum = neumaier_sum((0..self.num_cells()).map(|k| {
            self.heights[k].powf(p) * (self.breakpoints[k + 1] - self.breakpoints[k])
        }));
        Ok(sum.powf(1.0 / p))
    }

    /// Exact second moment via the cubic antiderivative per cell.
    pub fn second_moment(&self) -> f64 {
        neumaier_sum((0..self.num_cells()).map(|k| {
            let (a, b) = (self.breakpoints[k], self.breakpoints[k + 1]);
            self.heights[k] * (b * b * b - a * a * a) / 3.0
        }))
    }

    pub fn translated(&self, c: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.iter().map(|x| x + c).collect(),
            heights: self.heights.clone(),
        }
    }

    /// Exact (W * f)(x) with W the Morse kernel.
    pub fn convolve_w(&self, x: f64) -> f64 {
        let (l, r) = self.exp_moments(x);
        0.5 * (l + r)
    }

    /// Exact (W' * f)(x).
    pub fn convolve_w_prime(&self, x: f64) -> f64 {
        let (l, r) = self.exp_moments(x);
        0.5 * (r - l)
    }

    /// (integral of e^{-(x-z)} f(z) over z < x, integral of e^{-(z-x)} f(z)
    /// over z > x).
    fn exp_moments(&self, x: f64) -> (f64, f64) {
        let mut l = 0.0;
        let mut r = 0.0;
        for k in 0..self.num_cells() {
            let (a, b) = (self.breakpoints[k], self.breakpoints[k + 1]);
            let h = self.heights[k];
            if b <= x {
                l += h * (-f64::exp_m1(-(b - a))) * (-(x - b)).exp();
            } else if a >= x {
                r += h * (-f64::exp_m1(-(b - a))) * (-(a - x)).exp();
            } else {
                l += h * (-f64::exp_m1(-(x - a)));
                r += h * (-f64::exp_m1(-(b - x)));
            }
        }
        (l, r)
    }

    /// Three-column export: left breakpoint, right breakpoint, height.
    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for k in 0..self.num_cells() {
            writeln!(
                out,
                "{:e} {:e} {:e}",
                self.breakpoints[k],
                self.breakpoints[k + 1],
                self.heights[k]
            )?;
        }
        Ok(())
    }

    /// Parse the three-column format written by [`write_table`]; '#' starts
    /// a comment, blank lines are skipped, cells must tile an interval.
    pub fn read_table<R: BufRead>(input: R) -> Result<Self> {
        let mut breakpoints: Vec<f64> = Vec::new();
        let mut heights = Vec::new();
        for (ln, line) in input.lines().enumerate() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let fields: Vec<&str> = body.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::InvalidDensity(format!(
                    "line {}: expected 3 columns, got {}",
                    ln + 1,
                    fields.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidDensity(format!("line {}: bad number {s:?}", ln + 1)))
            };
            let left = parse(fields[0])?;
            let right = parse(fields[1])?;
            let h = parse(fields[2])?;
            if let Some(&prev) = breakpoints.last() {
                if left != prev {
                    return Err(Error::InvalidDensity(format!(
                        "line {}: cells do not tile (left {left} != previous right {prev})",
                        ln + 1
                    )));
                }
            } else {
                breakpoints.push(left);
            }
            breakpoints.push(right);
            heights.push(h);
        }
        Self::new(breakpoints, heights)
    }
}
