//! Riemann zeta on the real half-line s > 1 by Euler–Maclaurin summation.

use crate::error::{Error, Result};

/// Terms summed directly before the Euler–Maclaurin tail.
const DIRECT_TERMS: u32 = 20;

/// B_{2j} / (2j)! for j = 1..=8.
const BERNOULLI_OVER_FACT: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
    -3617.0 / 10_670_622_842_880_000.0,
];

pub fn riemann_zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) || s.is_nan() {
        return Err(Error::domain(format!("riemann_zeta requires s > 1, got {s}")));
    }
    if s > 60.0 {
        // 2^{-60} is already below double precision relative to 1.
        return Ok(1.0 + 2f64.powf(-s) + 3f64.powf(-s));
    }
    let n = f64::from(DIRECT_TERMS);
    let direct: f64 = (1..DIRECT_TERMS).rev().map(|k| f64::from(k).powf(-s)).sum();
    let n_pow = n.powf(-s);
    let mut tail = n * n_pow / (s - 1.0) + 0.5 * n_pow;
    // Rising factorial s (s+1) ... (s + 2j - 2) times N^{-s-2j+1}.
    let mut rising = s;
    let mut power = n_pow / n;
    for (j, c) in BERNOULLI_OVER_FACT.iter().enumerate() {
        tail += c * rising * power;
        let k = 2.0 * j as f64;
        rising *= (s + k + 1.0) * (s + k + 2.0);
        power /= n * n;
    }
    Ok(direct + tail)
}
