//! The Morse kernel W(x) = e^{-|x|}/2, its derivative, and exact mean
//! slopes of W' over intervals.
//!
//! The mean slope [W(b-p) - W(a-p)]/(b-a) is what the particle scheme uses
//! in place of W'. It is evaluated in cancellation-free form so that gaps
//! near the rounding level still come out with full relative accuracy.

use crate::error::{Error, Result};

/// Kernel value W(x) = e^{-|x|}/2. Rejects non-finite input.
pub fn morse_w(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    Ok(w(x))
}

/// Kernel derivative W'(x) = -sign(x) e^{-|x|}/2, with W'(0) = 0.
///
/// The value at zero is the even-symmetric principal value; it matches the
/// diagonal-excluding minimal subdifferential and only matters for the
/// classical pointwise velocity mode.
pub fn morse_w_prime(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    Ok(w_prime(x))
}

/// Mean of W'(. - p) over [a, b], i.e. [W(b-p) - W(a-p)]/(b-a).
pub fn interval_mean_slope(a: f64, b: f64, p: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && p.is_finite()) {
        return Err(Error::NonFinite(if !a.is_finite() {
            a
        } else if !b.is_finite() {
            b
        } else {
            p
        }));
    }
    if a >= b {
        return Err(Error::EmptyInterval { a, b });
    }
    Ok(mean_slope(a, b, p))
}

#[inline]
pub(crate) fn w(x: f64) -> f64 {
    0.5 * (-x.abs()).exp()
}

#[inline]
pub(crate) fn w_prime(x: f64) -> f64 {
    if x > 0.0 {
        -0.5 * (-x).exp()
    } else if x < 0.0 {
        0.5 * x.exp()
    } else {
        0.0
    }
}

/// (1 - e^{-d})/d, the mean of e^{-s} over [0, d]; extended to 1 at d = 0.
#[inline]
pub fn exp_decay_mean(d: f64) -> f64 {
    if d == 0.0 {
        1.0
    } else {
        -f64::exp_m1(-d) / d
    }
}

/// Unchecked mean slope; callers guarantee a < b and finite inputs.
///
/// Intervals on one side of p factor as +-(1/2) e^{-dist(p, interval)} g(b-a)
/// with g = `exp_decay_mean`; straddling intervals subtract two exp_m1 terms
/// whose absolute error stays below (b-a) ulp, so the quotient is exact to a
/// couple of ulp in every regime.
#[inline]
pub(crate) fn mean_slope(a: f64, b: f64, p: f64) -> f64 {
    if p <= a {
        -0.5 * (-(a - p)).exp() * exp_decay_mean(b - a)
    } else if p >= b {
        0.5 * (-(p - b)).exp() * exp_decay_mean(b - a)
    } else {
        0.5 * (f64::exp_m1(-(b - p)) - f64::exp_m1(-(p - a))) / (b - a)
    }
}
