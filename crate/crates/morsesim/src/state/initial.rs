//! Initial data and its atomization into particle configurations.

use std::io::BufRead;

use crate::error::{Error, Result};

use super::{PiecewiseDensity, SpeciesConfig};

/// Tabulated CDF: grid nodes (x, F(x)) with strictly increasing x and
/// nondecreasing F from 0 to 1, interpolated piecewise-linearly. Equivalent
/// to a piecewise-constant density, which keeps atomization exactly
/// invertible.
#[derive(Clone, Debug, PartialEq)]
pub struct CdfTable {
    xs: Vec<f64>,
    fs: Vec<f64>,
}

impl CdfTable {
    pub fn new(xs: Vec<f64>, mut fs: Vec<f64>) -> Result<Self> {
        if xs.len() != fs.len() || xs.len() < 2 {
            return Err(Error::InvalidCdf(format!(
                "need matching x/F columns with at least 2 rows, got {} and {}",
                xs.len(),
                fs.len()
            )));
        }
        for i in 0..xs.len() {
            if !xs[i].is_finite() || (i > 0 && xs[i] <= xs[i - 1]) {
                return Err(Error::InvalidCdf(format!(
                    "x column must be finite and strictly increasing (row {i})"
                )));
            }
            if !fs[i].is_finite() || (i > 0 && fs[i] < fs[i - 1]) {
                return Err(Error::InvalidCdf(format!(
                    "F column must be finite and nondecreasing (row {i})"
                )));
            }
        }
        if fs[0].abs() > 1e-12 || (fs[fs.len() - 1] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidCdf(format!(
                "F must run from 0 to 1, got [{}, {}]",
                fs[0],
                fs[fs.len() - 1]
            )));
        }
        fs[0] = 0.0;
        let last = fs.len() - 1;
        fs[last] = 1.0;
        Ok(Self { xs, fs })
    }

    /// Two-column whitespace-separated text, '#' comments.
    pub fn parse<R: BufRead>(input: R) -> Result<Self> {
        let mut xs = Vec::new();
        let mut fs = Vec::new();
        for (ln, line) in input.lines().enumerate() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let fields: Vec<&str> = body.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::InvalidCdf(format!(
                    "line {}: expected 2 columns, got {}",
                    ln + 1,
                    fields.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidCdf(format!("line {}: bad number {s:?}", ln + 1)))
            };
            xs.push(parse(fields[0])?);
            fs.push(parse(fields[1])?);
        }
        Self::new(xs, fs)
    }

    /// Tabulated CDF of the tent density on [center - halfwidth,
    /// center + halfwidth], sampled at `2*half_nodes + 1` grid points with
    /// the apex as an exact node (F = 1/2 there).
    pub fn tent(center: f64, halfwidth: f64, half_nodes: usize) -> Result<Self> {
        if !(halfwidth > 0.0) || !center.is_finite() || half_nodes == 0 {
            return Err(Error::InvalidCdf(format!(
                "bad tent parameters: center {center}, halfwidth {halfwidth}, nodes {half_nodes}"
            )));
        }
        let m = half_nodes as f64;
        let mut xs = Vec::with_capacity(2 * half_nodes + 1);
        let mut fs = Vec::with_capacity(2 * half_nodes + 1);
        for i in 0..=(2 * half_nodes) {
            let s = (i as f64 - m) / m; // in [-1, 1]
            xs.push(center + halfwidth * s);
            let f = if s <= 0.0 {
                0.5 * (1.0 + s) * (1.0 + s)
            } else {
                1.0 - 0.5 * (1.0 - s) * (1.0 - s)
            };
            fs.push(f);
        }
        Self::new(xs, fs)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn fs(&self) -> &[f64] {
        &self.fs
    }
}

/// Compactly supported unit-mass initial data for one species.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialDensity {
    Uniform { a: f64, b: f64 },
    Cdf(CdfTable),
    Density(PiecewiseDensity),
}

impl InitialDensity {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || a >= b {
            return Err(Error::InvalidDensity(format!(
                "uniform support [{a}, {b}] is empty"
            )));
        }
        Ok(InitialDensity::Uniform { a, b })
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            InitialDensity::Uniform { a, b } => (*a, *b),
            InitialDensity::Cdf(t) => {
                let i0 = t.fs.iter().rposition(|&f| f == 0.0).unwrap_or(0);
                let i1 = t.fs.iter().position(|&f| f == 1.0).unwrap_or(t.fs.len() - 1);
                (t.xs[i0], t.xs[i1])
            }
            InitialDensity::Density(d) => d.support(),
        }
    }

    /// Place N+1 particles at the 0, 1/N, ..., 1 quantiles: x_0 at the
    /// infimum of the support, then x_{i+1} = inf{x : F(x) >= F(x_i) + 1/N}.
    pub fn atomize(&self, n: usize) -> Result<SpeciesConfig> {
        if n == 0 {
            return Err(Error::TooFewParticles(n));
        }
        let positions = match self {
            InitialDensity::Uniform { a, b } => (0..=n)
                .map(|i| a + (b - a) * (i as f64) / (n as f64))
                .collect::<Vec<_>>(),
            InitialDensity::Cdf(t) => invert_cdf(&t.xs, &t.fs, n)?,
            InitialDensity::Density(d) => {
                let cum = d.cumulative_masses();
                invert_cdf(d.breakpoints(), &cum, n)?
            }
        };
        for i in 1..positions.len() {
            if positions[i] <= positions[i - 1] {
                return Err(Error::AtomizationStrictness { index: i });
            }
        }
        SpeciesConfig::new(positions)
    }

    /// The density this initial datum represents, as a piecewise-constant
    /// function (exact for all three kinds).
    pub fn as_density(&self) -> Result<PiecewiseDensity> {
        match self {
            InitialDensity::Uniform { a, b } => {
                PiecewiseDensity::new(vec![*a, *b], vec![1.0 / (b - a)])
            }
            InitialDensity::Cdf(t) => {
                let mut breaks: Vec<f64> = Vec::new();
                let mut heights = Vec::new();
                for i in 0..t.xs.len() - 1 {
                    let dm = t.fs[i + 1] - t.fs[i];
                    let dx = t.xs[i + 1] - t.xs[i];
                    if dm <= 0.0 {
                        continue;
                    }
                    match breaks.last() {
                        None => breaks.push(t.xs[i]),
                        Some(&prev) if prev < t.xs[i] => {
                            // flat stretch of the CDF: explicit zero cell
                            heights.push(0.0);
                            breaks.push(t.xs[i]);
                        }
                        _ => {}
                    }
                    breaks.push(t.xs[i + 1]);
                    heights.push(dm / dx);
                }
                PiecewiseDensity::new(breaks, heights)
            }
            InitialDensity::Density(d) => Ok(d.clone()),
        }
    }
}

/// Left inverse of a piecewise-linear CDF at targets i/n; `cdf[0]` must be 0
/// and `cdf.last()` 1.
fn invert_cdf(pts: &[f64], cdf: &[f64], n: usize) -> Result<Vec<f64>> {
    debug_assert_eq!(pts.len(), cdf.len());
    // inf of the support: the last node still at mass zero.
    let i0 = cdf.iter().rposition(|&f| f == 0.0).unwrap_or(0);
    let mut out = Vec::with_capacity(n + 1);
    out.push(pts[i0]);
    for i in 1..=n {
        let target = (i as f64) / (n as f64);
        // first index with cdf >= target
        let j = cdf.partition_point(|&f| f < target);
        let j = j.min(cdf.len() - 1);
        let x = if cdf[j] <= target {
            // exact hit (or target 1 at the end)
            pts[j]
        } else {
            let (f0, f1) = (cdf[j - 1], cdf[j]);
            let (x0, x1) = (pts[j - 1], pts[j]);
            x0 + (target - f0) * (x1 - x0) / (f1 - f0)
        };
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_quantiles_are_exact() {
        let u = InitialDensity::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.atomize(2).unwrap().positions(), &[0.0, 0.5, 1.0]);
        assert_eq!(
            u.atomize(4).unwrap().positions(),
            &[0.0, 0.25, 0.5, 0.75, 1.0]
        );
    }

    #[test]
    fn tent_median_is_the_apex() {
        // Analytic oracle: the tent CDF on [-1,1] reaches 1/2 exactly at 0.
        let t = InitialDensity::Cdf(CdfTable::tent(0.0, 1.0, 8).unwrap());
        let cfg = t.atomize(2).unwrap();
        assert_eq!(cfg.positions(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn tent_quarter_quantiles_match_closed_form() {
        // F(x) = (1+x)^2/2 on [-1,0]; F = 1/4 at x = sqrt(1/2) - 1.
        let t = InitialDensity::Cdf(CdfTable::tent(0.0, 1.0, 4096).unwrap());
        let cfg = t.atomize(4).unwrap();
        let q = 0.5f64.sqrt() - 1.0;
        assert_relative_eq!(cfg.positions()[1], q, epsilon = 1e-7);
        assert_relative_eq!(cfg.positions()[3], -q, epsilon = 1e-7);
    }

    #[test]
    fn atomize_then_reconstruct_uniform_is_exact() {
        let u = InitialDensity::uniform(-2.0, 3.0).unwrap();
        let d = PiecewiseDensity::from_config(&u.atomize(8).unwrap());
        for h in d.heights() {
            assert_relative_eq!(*h, 0.2, max_relative = 1e-13);
        }
    }

    #[test]
    fn near_atomic_cdf_is_rejected_by_strictness() {
        // Mass 0.9 packed into a single-ulp slice: the quantiles inside it
        // collide in floating point, which is the atom guard's job to catch.
        let t = CdfTable::new(
            vec![0.0, f64::from_bits(1), 1.0],
            vec![0.0, 0.9, 1.0],
        )
        .unwrap();
        let e = InitialDensity::Cdf(t).atomize(4).unwrap_err();
        assert!(matches!(e, Error::AtomizationStrictness { .. }), "{e}");
    }

    #[test]
    fn cdf_parse_rejects_bad_tables() {
        assert!(CdfTable::parse("0 0\n1 0.5\n".as_bytes()).is_err()); // ends at 0.5
        assert!(CdfTable::parse("0 0\n0 1\n".as_bytes()).is_err()); // duplicate x
        assert!(CdfTable::parse("0 0\n1 0.6\n2 0.4\n3 1\n".as_bytes()).is_err()); // decreasing F
        let ok = CdfTable::parse("# tent-ish\n0 0\n0.5 0.8\n1 1\n".as_bytes());
        assert!(ok.is_ok());
    }

    #[test]
    fn atomized_sup_norm_stays_bounded_by_the_input() {
        // reconstruction heights are cell averages of the input density, so
        // the sup norm never exceeds the input's; assert the 2x envelope
        // uniformly over N for the uniform and tent families
        let families: Vec<(InitialDensity, f64)> = vec![
            (InitialDensity::uniform(-0.75, 1.25).unwrap(), 0.5),
            (InitialDensity::Cdf(CdfTable::tent(0.3, 1.0, 4096).unwrap()), 1.0),
        ];
        for (density, sup) in families {
            let mut n = 2;
            while n <= 1024 {
                let d = PiecewiseDensity::from_config(&density.atomize(n).unwrap());
                let got = d.lp_norm(f64::INFINITY).unwrap();
                assert!(got <= 2.0 * sup + 1e-12, "n={n}: {got} vs sup {sup}");
                n *= 2;
            }
        }
    }

    #[test]
    fn atomization_distances_decrease_toward_the_input() {
        // uniform data atomizes exactly: successive resolutions coincide
        let uniform = InitialDensity::uniform(-0.75, 1.25).unwrap();
        let recon_u = |n: usize| PiecewiseDensity::from_config(&uniform.atomize(n).unwrap());
        for n in [2usize, 8, 64] {
            assert!(crate::state::w2_density(&recon_u(n), &recon_u(2 * n)) < 1e-14);
        }
        // the tent is genuinely approximated: distances strictly decrease
        // toward zero as the resolution doubles
        let tent = InitialDensity::Cdf(CdfTable::tent(0.3, 1.0, 4096).unwrap());
        let recon = |n: usize| PiecewiseDensity::from_config(&tent.atomize(n).unwrap());
        let mut prev = f64::INFINITY;
        let mut n = 2;
        while n <= 1024 {
            let d = crate::state::w2_density(&recon(n), &recon(2 * n));
            assert!(d < prev, "n={n}: {d} !< {prev}");
            prev = d;
            n *= 2;
        }
        assert!(prev < 1e-3, "final distance {prev}");
    }

    #[test]
    fn density_input_round_trips_through_atomize() {
        let d = PiecewiseDensity::new(vec![0.0, 0.25, 1.0], vec![2.0, 2.0 / 3.0]).unwrap();
        let cfg = InitialDensity::Density(d).atomize(2).unwrap();
        // Half the mass sits on [0, 0.25]: the median is 0.25.
        assert_relative_eq!(cfg.positions()[1], 0.25, max_relative = 1e-13);
        assert_eq!(cfg.positions()[0], 0.0);
        assert_eq!(cfg.positions()[2], 1.0);
    }
}
