//! C^1 test functions with closed-form values, derivatives, antiderivatives,
//! and exponential-weighted derivative integrals.
//!
//! The weak-form residual needs integrals of phi'(z) e^{-(z-u)} and
//! phi'(z) e^{-(v-z)} over breakpoint-free segments. Each kind carries those
//! in closed form so the spatial side of the residual is exact.

use libm::erf;

const SQRT_HALF_PI: f64 = 1.2533141373155003; // sqrt(pi/2)

#[derive(Clone, Copy, Debug)]
pub enum TestFunction {
    /// exp(-(x-c)^2 / (2 w^2))
    GaussianBump { center: f64, width: f64 },
    /// 1 + cos(omega x) on |x| <= pi/omega, zero outside; the only C^1
    /// truncation of a pure sinusoid, so "cutoff radius" is pi/omega
    Sine { frequency: f64 },
    /// (1-|s|)^2 (1+2|s|) with s = (x-c)/w on |s| <= 1
    CubicSplineBump { center: f64, width: f64 },
}

impl TestFunction {
    /// Width is capped at 30: beyond that exp(w^2/2) in the closed-form
    /// weighted integrals leaves f64 range, and the kernel's reach is ~40
    /// anyway. Use a wide cubic spline bump for near-constant tests.
    pub fn gaussian(center: f64, width: f64) -> Self {
        assert!(width > 0.0 && width <= 30.0 && center.is_finite());
        TestFunction::GaussianBump { center, width }
    }

    pub fn sine(frequency: f64) -> Self {
        assert!(frequency > 0.0 && frequency.is_finite());
        TestFunction::Sine { frequency }
    }

    pub fn cubic_spline(center: f64, width: f64) -> Self {
        assert!(width > 0.0 && width.is_finite());
        TestFunction::CubicSplineBump { center, width }
    }

    pub fn cutoff_radius(&self) -> Option<f64> {
        match self {
            TestFunction::GaussianBump { .. } => None,
            TestFunction::Sine { frequency } => Some(std::f64::consts::PI / frequency),
            TestFunction::CubicSplineBump { width, .. } => Some(*width),
        }
    }

    pub fn phi(&self, x: f64) -> f64 {
        match *self {
            TestFunction::GaussianBump { center, width } => {
                let s = (x - center) / width;
                (-0.5 * s * s).exp()
            }
            TestFunction::Sine { frequency } => {
                let r = std::f64::consts::PI / frequency;
                if x.abs() <= r {
                    1.0 + (frequency * x).cos()
                } else {
                    0.0
                }
            }
            TestFunction::CubicSplineBump { center, width } => {
                let s = ((x - center) / width).abs();
                if s <= 1.0 {
                    (1.0 - s) * (1.0 - s) * (1.0 + 2.0 * s)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn phi_prime(&self, x: f64) -> f64 {
        match *self {
            TestFunction::GaussianBump { center, width } => {
                let s = (x - center) / width;
                -(s / width) * (-0.5 * s * s).exp()
            }
            TestFunction::Sine { frequency } => {
                let r = std::f64::consts::PI / frequency;
                if x.abs() <= r {
                    -frequency * (frequency * x).sin()
                } else {
                    0.0
                }
            }
            TestFunction::CubicSplineBump { center, width } => {
                let s = (x - center) / width;
                if s.abs() <= 1.0 {
                    6.0 / width * s * (s.abs() - 1.0)
                } else {
                    0.0
                }
            }
        }
    }

    /// Exact sup norm of phi'.
    pub fn phi_prime_sup(&self) -> f64 {
        match *self {
            TestFunction::GaussianBump { width, .. } => (-0.5f64).exp() / width,
            TestFunction::Sine { frequency } => frequency,
            TestFunction::CubicSplineBump { width, .. } => 1.5 / width,
        }
    }

    /// Antiderivative with value 0 at minus infinity.
    pub fn antiderivative(&self, x: f64) -> f64 {
        match *self {
            TestFunction::GaussianBump { center, width } => {
                SQRT_HALF_PI * width * (1.0 + erf((x - center) / (width * std::f64::consts::SQRT_2)))
            }
            TestFunction::Sine { frequency } => {
                let r = std::f64::consts::PI / frequency;
                if x <= -r {
                    0.0
                } else if x >= r {
                    2.0 * r
                } else {
                    (x + r) + (frequency * x).sin() / frequency
                }
            }
            TestFunction::CubicSplineBump { center, width } => {
                let s = (x - center) / width;
                if s <= -1.0 {
                    0.0
                } else if s >= 1.0 {
                    width
                } else if s <= 0.0 {
                    width * (0.5 + s - s.powi(3) - 0.5 * s.powi(4))
                } else {
                    width * (0.5 + s - s.powi(3) + 0.5 * s.powi(4))
                }
            }
        }
    }

    /// Integral of phi'(z) e^{-(z-u)} over [u, v].
    pub fn int_phi_prime_decay(&self, u: f64, v: f64) -> f64 {
        if v <= u {
            return 0.0;
        }
        match *self {
            TestFunction::GaussianBump { center, width } => {
                if self.gaussian_negligible(u, v, center) {
                    return 0.0;
                }
                let boundary = self.phi(v) * (-(v - u)).exp() - self.phi(u);
                boundary + gaussian_weighted_mass(center, width, u, v, -1.0, u)
            }
            TestFunction::Sine { frequency } => {
                let r = std::f64::consts::PI / frequency;
                let (p, q) = (u.max(-r), v.min(r));
                if p >= q {
                    return 0.0;
                }
                let om = frequency;
                let term = |z: f64| {
                    (-(z - u)).exp() * (-(om * z).sin() - om * (om * z).cos()) / (1.0 + om * om)
                };
                -om * (term(q) - term(p))
            }
            TestFunction::CubicSplineBump { center, width } => {
                cubic_exp_integral(center, width, u, v, ExpAnchor::Decay(u))
            }
        }
    }

    /// Integral of phi'(z) e^{-(v-z)} over [u, v].
    pub fn int_phi_prime_grow(&self, u: f64, v: f64) -> f64 {
        if v <= u {
            return 0.0;
        }
        match *self {
            TestFunction::GaussianBump { center, width } => {
                if self.gaussian_negligible(u, v, center) {
                    return 0.0;
                }
                let boundary = self.phi(v) - self.phi(u) * (-(v - u)).exp();
                boundary - gaussian_weighted_mass(center, width, u, v, 1.0, v)
            }
            TestFunction::Sine { frequency } => {
                let r = std::f64::consts::PI / frequency;
                let (p, q) = (u.max(-r), v.min(r));
                if p >= q {
                    return 0.0;
                }
                let om = frequency;
                let term = |z: f64| {
                    (-(v - z)).exp() * ((om * z).sin() - om * (om * z).cos()) / (1.0 + om * om)
                };
                -om * (term(q) - term(p))
            }
            TestFunction::CubicSplineBump { center, width } => {
                cubic_exp_integral(center, width, u, v, ExpAnchor::Grow(v))
            }
        }
    }

    fn gaussian_negligible(&self, u: f64, v: f64, center: f64) -> bool {
        // the nearer endpoint already underflows and the interval is on one
        // side of the bump
        (v <= center && self.phi(v) == 0.0) || (u >= center && self.phi(u) == 0.0)
    }
}

/// Integral of phi(z) e^{s (z - anchor)} over [u, v] for the Gaussian bump,
/// s = +-1, via the completed square; the anchor keeps exponents moderate.
fn gaussian_weighted_mass(center: f64, width: f64, u: f64, v: f64, s: f64, anchor: f64) -> f64 {
    let mu = center + s * width * width;
    let pref = (s * (center - anchor) + 0.5 * width * width).exp();
    let scale = width * std::f64::consts::SQRT_2;
    pref * SQRT_HALF_PI * width * (erf((v - mu) / scale) - erf((u - mu) / scale))
}

enum ExpAnchor {
    /// weight e^{-(z - u)}
    Decay(f64),
    /// weight e^{-(v - z)}
    Grow(f64),
}

/// Integral of the cubic bump's phi'(z) times an exponential weight over
/// [u, v], splitting at the |s| kink. phi' is quadratic per half, so the
/// antiderivative is (P -+ P' + P'') e^{weight} evaluated at the ends.
fn cubic_exp_integral(center: f64, width: f64, u: f64, v: f64, anchor: ExpAnchor) -> f64 {
    let lo = u.max(center - width);
    let hi = v.min(center + width);
    if lo >= hi {
        return 0.0;
    }
    let piece = |a: f64, b: f64, negative_half: bool| -> f64 {
        if a >= b {
            return 0.0;
        }
        let (c0, w0) = (center, width);
        // P(z) = phi'(z) per half, with P', P'' in z
        let p = |z: f64| {
            let s = (z - c0) / w0;
            if negative_half {
                6.0 / w0 * (-s * s - s)
            } else {
                6.0 / w0 * (s * s - s)
            }
        };
        let dp = |z: f64| {
            let s = (z - c0) / w0;
            if negative_half {
                6.0 / (w0 * w0) * (-2.0 * s - 1.0)
            } else {
                6.0 / (w0 * w0) * (2.0 * s - 1.0)
            }
        };
        let ddp = if negative_half {
            -12.0 / (w0 * w0 * w0)
        } else {
            12.0 / (w0 * w0 * w0)
        };
        match anchor {
            ExpAnchor::Decay(u0) => {
                // antiderivative of P e^{-(z-u0)} is -(P + P' + P'') e^{-(z-u0)}
                let f = |z: f64| -(p(z) + dp(z) + ddp) * (-(z - u0)).exp();
                f(b) - f(a)
            }
            ExpAnchor::Grow(v0) => {
                // antiderivative of P e^{-(v0-z)} is (P - P' + P'') e^{-(v0-z)}
                let f = |z: f64| (p(z) - dp(z) + ddp) * (-(v0 - z)).exp();
                f(b) - f(a)
            }
        }
    };
    let left = piece(lo, hi.min(center), true);
    let right = piece(lo.max(center), hi, false);
    left + right
}
