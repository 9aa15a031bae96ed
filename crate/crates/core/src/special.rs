//! Error function and the standard normal CDF.
//!
//! `erf` uses the all-positive series
//!
//! ```text
//! erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n 2^n x^(2n+1) / (1*3*...*(2n+1))
//! ```
//!
//! for |x| <= 3, and the Lentz continued fraction for `erfc` above that.
//! Neither branch suffers cancellation; absolute error stays near 1e-16.

use crate::error::{Error, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const SERIES_LIMIT: f64 = 3.0;

/// Standard error function `(2/sqrt(pi)) * int_0^x exp(-t^2) dt`.
pub fn erf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    Ok(erf_finite(x))
}

pub(crate) fn erf_finite(x: f64) -> f64 {
    let a = x.abs();
    let v = if a <= SERIES_LIMIT {
        erf_series(a)
    } else {
        1.0 - erfc_continued_fraction(a)
    };
    v.copysign(x)
}

/// Complementary error function for finite `x`.
pub fn erfc(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    Ok(erfc_finite(x))
}

fn erfc_finite(x: f64) -> f64 {
    if x > SERIES_LIMIT {
        erfc_continued_fraction(x)
    } else if x < -SERIES_LIMIT {
        2.0 - erfc_continued_fraction(-x)
    } else {
        1.0 - erf_finite(x)
    }
}

fn erf_series(a: f64) -> f64 {
    let x2 = a * a;
    let mut term = a;
    let mut sum = a;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..500 {
        let an = n as f64 / 2.0;
        d = x + an * d;
        d = if d.abs() < TINY { TINY } else { d };
        c = x + an / c;
        c = if c.abs() < TINY { TINY } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (f * std::f64::consts::PI.sqrt())
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z.is_infinite() {
        return if z > 0.0 { 1.0 } else { 0.0 };
    }
    0.5 * erfc_finite(-z / std::f64::consts::SQRT_2)
}

/// Two-sided coverage `P(|Z| <= k)` of a standard normal.
pub fn two_sided_coverage(k: f64) -> f64 {
    erf_finite(k / std::f64::consts::SQRT_2)
}
