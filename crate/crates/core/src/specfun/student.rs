//! Student's t distribution.

use std::f64::consts::PI;

use super::gamma::{beta_reg_xy, log_gamma_unchecked};
use super::normal::gauss_quantile_unchecked;
use crate::error::{Error, Result};

fn check_df(df: f64) -> Result<()> {
    if !(df > 0.0) || df.is_nan() {
        return Err(Error::domain(format!("degrees of freedom must be positive, got {df}")));
    }
    Ok(())
}

pub(crate) fn t_pdf_unchecked(x: f64, df: f64) -> f64 {
    let ln_norm = log_gamma_unchecked(0.5 * (df + 1.0))
        - log_gamma_unchecked(0.5 * df)
        - 0.5 * (df * PI).ln();
    (ln_norm - 0.5 * (df + 1.0) * (x * x / df).ln_1p()).exp()
}

/// Density of Student's t with `df` degrees of freedom.
pub fn t_pdf(x: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    Ok(t_pdf_unchecked(x, df))
}

/// P(T > |x|), computed without cancellation in either tail.
pub(crate) fn t_tail_unchecked(x: f64, df: f64) -> f64 {
    let x = x.abs();
    if x.is_infinite() {
        return 0.0;
    }
    let x2 = x * x;
    let denom = df + x2;
    0.5 * beta_reg_xy(0.5 * df, 0.5, df / denom, x2 / denom)
}

/// Cumulative distribution function F_df(x).
pub fn t_cdf(x: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if x.is_nan() {
        return Err(Error::domain("t_cdf argument is NaN"));
    }
    let tail = t_tail_unchecked(x, df);
    Ok(if x < 0.0 { tail } else { 1.0 - tail })
}

/// Survival function 1 - F_df(x).
pub fn t_sf(x: f64, df: f64) -> Result<f64> {
    t_cdf(-x, df)
}

/// The x ≥ 0 with P(T > x) = q, for q in (0, 1/2].
///
/// Bracketed search seeded at the Gaussian quantile, refined by Newton on
/// ln P(T > x) with bisection fallback whenever a step leaves the bracket.
pub fn t_upper_quantile(q: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if !(q > 0.0 && q <= 0.5) {
        return Err(Error::domain(format!("upper tail probability must lie in (0, 1/2], got {q}")));
    }
    if q == 0.5 {
        return Ok(0.0);
    }
    let ln_q = q.ln();
    let phi = |x: f64| t_tail_unchecked(x, df).ln() - ln_q;

    let seed = gauss_quantile_unchecked(1.0 - q).max(1e-3);
    let mut lo = 0.0;
    let mut hi = seed;
    let mut guard = 0;
    while phi(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 2100 || !hi.is_finite() {
            return Err(Error::numerical("t quantile bracket search overflowed"));
        }
    }

    let mut x = if seed > lo && seed < hi { seed } else { 0.5 * (lo + hi) };
    for _ in 0..500 {
        let fx = phi(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let tail = t_tail_unchecked(x, df);
        let slope = -t_pdf_unchecked(x, df) / tail;
        let mut next = x - fx / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::numerical(format!("t quantile did not converge (q = {q}, df = {df})")))
}

/// Quantile function F_df⁻¹(p).
pub fn t_quantile(p: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("t_quantile requires p in (0, 1), got {p}")));
    }
    if p < 0.5 {
        t_upper_quantile(p, df).map(|x| -x)
    } else {
        t_upper_quantile(1.0 - p, df)
    }
}
