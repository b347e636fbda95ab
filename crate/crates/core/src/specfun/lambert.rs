//! The maps W̄_i(y) = -W_i(-e^{-y}) built from the real Lambert W branches.
//!
//! With u = W̄_i(y) the defining relation becomes u - ln u = y, which is
//! solved directly. The argument -e^{-y} is never formed, so large y does
//! not underflow.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Principal branch W_0; W̄_0 maps [1, ∞) onto (0, 1].
    Principal,
    /// Lower branch W_{-1}; W̄_{-1} maps [1, ∞) onto [1, ∞).
    Lower,
}

impl Branch {
    pub fn from_index(i: i32) -> Result<Self> {
        match i {
            0 => Ok(Branch::Principal),
            -1 => Ok(Branch::Lower),
            _ => Err(Error::domain(format!("Lambert W branch must be 0 or -1, got {i}"))),
        }
    }
}

const MAX_ITER: usize = 200;

/// Safeguarded Newton on a monotone function inside a sign-changing bracket.
fn solve_monotone(
    f: impl Fn(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    start: f64,
    increasing: bool,
) -> f64 {
    let mut x = if start > lo && start < hi { start } else { 0.5 * (lo + hi) };
    for _ in 0..MAX_ITER {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == increasing {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - fx / dfx;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs().max(1.0) {
            return next;
        }
        x = next;
    }
    x
}

/// W̄_branch(y) for y ≥ 1.
pub fn wbar(branch: Branch, y: f64) -> Result<f64> {
    if !(y >= 1.0) || y.is_infinite() {
        return Err(Error::domain(format!("wbar requires finite y >= 1, got {y}")));
    }
    if y == 1.0 {
        return Ok(1.0);
    }
    // Near the branch point u - ln u ≈ 1 + (u - 1)²/2.
    let delta = (2.0 * (y - 1.0)).sqrt();
    Ok(match branch {
        Branch::Principal => {
            // Solve e^v - v = y for v = ln u ≤ 0; decreasing in v.
            let start = if y < 2.0 { (1.0 - delta).max(1e-300).ln() } else { -y + (-y).exp() };
            let v = solve_monotone(
                |v| (v.exp() - v - y, v.exp() - 1.0),
                -y - 1.0,
                0.0,
                start,
                false,
            );
            v.exp()
        }
        Branch::Lower => {
            // Solve u - ln u = y for u ≥ 1; increasing in u.
            let start = if y < 2.0 { 1.0 + delta } else { y + y.ln() };
            solve_monotone(|u| (u - u.ln() - y, 1.0 - 1.0 / u), 1.0, 2.0 * y + 1.0, start, true)
        }
    })
}
