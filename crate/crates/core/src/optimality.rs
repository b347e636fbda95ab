//! Reference quantities for the Gaussian mean problem: KL divergences, the
//! best achievable e-power, the minimax interval-width lower bound, and the
//! one-observation numeraire e-value.

use serde::Serialize;

use crate::error::{Error, Result};

/// A Gaussian alternative N(μ, σ²) and its standardized mean θ = μ/σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectSize {
    pub mu: f64,
    pub sigma: f64,
}

impl EffectSize {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain("effect size needs finite mu and sigma > 0"));
        }
        Ok(Self { mu, sigma })
    }

    /// Unit-variance effect θ.
    pub fn standardized(theta: f64) -> Result<Self> {
        Self::new(theta, 1.0)
    }

    pub fn theta(&self) -> f64 {
        self.mu / self.sigma
    }
}

/// D_KL(N(μ₁, σ₁²) ‖ N(μ₂, σ₂²)).
pub fn kl_gauss(mu1: f64, sig1_sq: f64, mu2: f64, sig2_sq: f64) -> Result<f64> {
    if !(sig1_sq > 0.0) || !(sig2_sq > 0.0) {
        return Err(Error::domain("variances must be positive"));
    }
    let d = mu1 - mu2;
    let ratio = sig1_sq / sig2_sq;
    // ½(r - 1 - ln r) + (μ₁-μ₂)²/(2σ₂²), with r - 1 - ln r kept exact near 1.
    let r_term = (ratio - 1.0) - (ratio - 1.0).ln_1p();
    Ok(0.5 * r_term + d * d / (2.0 * sig2_sq))
}

/// Largest e-power against the null μ = 0 (or μ ≤ 0 when `one_sided`):
/// ½ ln(1 + θ²), with θ replaced by θ ∨ 0 for the one-sided null.
pub fn epower_ceiling(effect: &EffectSize, one_sided: bool) -> f64 {
    let theta = if one_sided { effect.theta().max(0.0) } else { effect.theta() };
    0.5 * (theta * theta).ln_1p()
}

/// √((6α - 9α²)^{-2/n} - 1), below which no t-interval's width can fall
/// with probability 2α.
pub fn minimax_lower_bound(alpha: f64, n: u64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0 / 3.0) {
        return Err(Error::domain(format!(
            "minimax bound requires 0 < alpha < 1/3, got {alpha}"
        )));
    }
    if n == 0 {
        return Err(Error::domain("minimax bound requires n >= 1"));
    }
    let base = 6.0 * alpha - 9.0 * alpha * alpha;
    Ok((-2.0 / n as f64 * base.ln()).exp_m1().sqrt())
}

/// dN(μ, σ²)/dN(0, σ² + μ²) at x₁: the log-optimal e-value for the null
/// μ = 0 against this alternative.
pub fn numeraire_evalue(x1: f64, effect: &EffectSize) -> f64 {
    log_numeraire_evalue(x1, effect).exp()
}

pub fn log_numeraire_evalue(x1: f64, effect: &EffectSize) -> f64 {
    let s2 = effect.sigma * effect.sigma;
    let v = s2 + effect.mu * effect.mu;
    let z = x1 - effect.mu;
    0.5 * (v / s2).ln() - z * z / (2.0 * s2) + x1 * x1 / (2.0 * v)
}
