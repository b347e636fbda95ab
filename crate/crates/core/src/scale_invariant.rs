//! Test processes on the scale-invariant filtration.
//!
//! Everything here depends on the sample only through n, S_n/√V_n and the
//! centered sum of squares relative to V_n, so rescaling the data leaves
//! every value unchanged. Testing or covering a location μ0 is done by
//! feeding X_i - μ0 to the evaluators.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun::{integrate, log_gamma, t_pdf, t_sf, QuadratureSettings};
use crate::stats::{
    check_alpha, ConfidenceSequence, CsInterval, Filtration, ProcessEvaluator, ProcessKind,
    SampleStats,
};

/// Hyperparameters shared by the scale-invariant processes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiProcessParams {
    /// Precision c² of the Gaussian mixing prior on θ = μ/σ.
    pub c_sq: f64,
    /// Start time of Lai's confidence sequence.
    pub lai_m: u64,
    pub mu0: f64,
}

impl Default for SiProcessParams {
    fn default() -> Self {
        Self {
            c_sq: 1.0,
            lai_m: 2,
            mu0: 0.0,
        }
    }
}

impl SiProcessParams {
    pub fn validate(&self) -> Result<()> {
        check_c_sq(self.c_sq)?;
        if self.lai_m < 2 {
            return Err(Error::domain(format!("lai_m must be at least 2, got {}", self.lai_m)));
        }
        if !self.mu0.is_finite() {
            return Err(Error::domain("mu0 must be finite"));
        }
        Ok(())
    }
}

fn check_c_sq(c_sq: f64) -> Result<()> {
    if !(c_sq > 0.0) || !c_sq.is_finite() {
        return Err(Error::domain(format!("c_sq must be positive and finite, got {c_sq}")));
    }
    Ok(())
}

fn require_scale(stats: &SampleStats) -> Result<()> {
    if stats.n() == 0 {
        return Err(Error::domain("at least one observation is required"));
    }
    if !(stats.sum_sq() > 0.0) {
        return Err(Error::degenerate("all observations are zero"));
    }
    Ok(())
}

/// S_n / √V_n.
fn standardized_sum(stats: &SampleStats) -> f64 {
    stats.sum() / stats.sum_sq().sqrt()
}

fn h_settings() -> QuadratureSettings {
    QuadratureSettings::new(1e-300, 1e-12, 400).expect("valid settings")
}

/// Pieces of log h_{θ,n} after substituting y = z²:
/// h = e^{-nθ²/2} / Γ(n/2) · 2 ∫₀^∞ e^{g(z)} dz, g(z) = (n-1) ln z - z² + b z,
/// b = θ r √2 with r = S_n/√V_n. The integrand peaks at z*.
struct SiIntegrand {
    n: f64,
    b: f64,
    z_star: f64,
    /// -nθ²/2 - ln Γ(n/2) + ln 2 + g(z*).
    log_scale: f64,
}

impl SiIntegrand {
    /// `k` is Σ(X_i - x̄)²/V_n, so that n - r² = n k without cancellation.
    fn new(n: u64, r: f64, k: f64, theta: f64) -> Self {
        let n = n as f64;
        let b = theta * r * std::f64::consts::SQRT_2;
        let disc = (b * b + 8.0 * (n - 1.0)).sqrt();
        let front = -log_gamma(0.5 * n).expect("n >= 1") + LN_2;
        // z* is the positive root of 2z² - bz - (n-1) = 0.
        let (z_star, exponent) = if b >= 0.0 {
            let z = 0.25 * (b + disc);
            // With z*² = (b z* + n - 1)/2 the θ² terms cancel exactly into
            // -θ²(n - r²)/2.
            let mut e = -0.5 * theta * theta * n * k;
            if n > 1.0 {
                e += b * (n - 1.0) / (disc + b) + (n - 1.0) * (z.ln() - 0.5);
            }
            (z, e)
        } else {
            let z = if n > 1.0 { 2.0 * (n - 1.0) / (disc - b) } else { 0.0 };
            let g = if n > 1.0 { (n - 1.0) * z.ln() } else { 0.0 } - z * z + b * z;
            (z, -0.5 * n * theta * theta + g)
        };
        Self {
            n,
            b,
            z_star,
            log_scale: front + exponent,
        }
    }

    /// Upper bound on log h from ∫ e^{g - g(z*)} ≤ √π, valid since g'' ≤ -2.
    fn log_upper_bound(&self) -> f64 {
        self.log_scale + 0.5 * PI.ln()
    }

    /// g(z* + t) - g(z*), using g'(z*) = 0 to keep it exact when z* is huge.
    fn log_rel(&self, t: f64) -> f64 {
        if self.n == 1.0 {
            t * (self.b - 2.0 * self.z_star) - t * t
        } else {
            let u = t / self.z_star;
            (self.n - 1.0) * (u.ln_1p() - u) - t * t
        }
    }

    fn log_h(&self) -> Result<f64> {
        let lo = (-self.z_star).max(-10.0);
        let integral = integrate(|t| self.log_rel(t).exp(), lo, 10.0, &h_settings())?;
        Ok(self.log_scale + integral.ln())
    }
}

fn log_si_from_ratio(n: u64, r: f64, k: f64, theta: f64) -> Result<f64> {
    if theta == 0.0 {
        return Ok(0.0);
    }
    SiIntegrand::new(n, r, k, theta).log_h()
}

/// log h_{θ,n}.
pub fn log_si_likelihood_ratio(theta: f64, stats: &SampleStats) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::domain("theta must be finite"));
    }
    require_scale(stats)?;
    let k = stats.centered_ss() / stats.sum_sq();
    log_si_from_ratio(stats.n(), standardized_sum(stats), k, theta)
}

/// The scale-invariant likelihood ratio h_{θ,n} for the alternative
/// μ/σ = θ against μ = 0.
pub fn si_likelihood_ratio(theta: f64, stats: &SampleStats) -> Result<f64> {
    log_si_likelihood_ratio(theta, stats).map(f64::exp)
}

/// log H_n; +∞ at n = 1 and whenever all observations are equal.
pub fn log_lai_ensm(stats: &SampleStats) -> Result<f64> {
    if stats.n() == 0 {
        return Err(Error::domain("at least one observation is required"));
    }
    if stats.n() == 1 || !(stats.centered_ss() > 0.0) {
        return Ok(f64::INFINITY);
    }
    let n = stats.n() as f64;
    // nV_n / (nV_n - S_n²) = V_n / Σ (X_i - x̄)².
    Ok(0.5 * (2.0 * PI / n).ln() + 0.5 * n * (stats.sum_sq() / stats.centered_ss()).ln())
}

/// Lai's extended nonnegative supermartingale H_n.
pub fn lai_ensm(stats: &SampleStats) -> Result<f64> {
    log_lai_ensm(stats).map(f64::exp)
}

/// Constants of Lai's confidence sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaiThreshold {
    pub m: u64,
    pub a: f64,
    pub b: f64,
    pub ln_b: f64,
}

/// Crossing probability bound 2(1 - F_{m-1}(a) + a f_{m-1}(a)).
fn lai_bound(a: f64, df: f64) -> f64 {
    2.0 * (t_sf(a, df).expect("df > 0") + a * t_pdf(a, df).expect("df > 0"))
}

/// Solves 2(1 - F_{m-1}(a) + a f_{m-1}(a)) = α for a by bisection and sets
/// b = (1 + a²/(m-1))^m / m.
pub fn lai_threshold(m: u64, alpha: f64) -> Result<LaiThreshold> {
    if m < 2 {
        return Err(Error::domain(format!("Lai start time must be at least 2, got {m}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let df = (m - 1) as f64;
    let a = if alpha == 1.0 {
        0.0
    } else {
        let mut lo = 0.0;
        let mut hi = 1.0;
        while lai_bound(hi, df) > alpha {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::numerical("Lai threshold bracket overflowed"));
            }
        }
        for _ in 0..400 {
            if hi - lo <= 1e-12 * hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if lai_bound(mid, df) > alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mf = m as f64;
    let ln_b = -mf.ln() + mf * (a * a / df).ln_1p();
    Ok(LaiThreshold {
        m,
        a,
        b: ln_b.exp(),
        ln_b,
    })
}

impl LaiThreshold {
    /// ξ_n = √(s_n² ((bn)^{1/n} - 1)).
    pub fn radius(&self, stats: &SampleStats) -> f64 {
        let n = stats.n() as f64;
        let factor = ((self.ln_b + n.ln()) / n).exp_m1().max(0.0);
        (stats.var_pop() * factor).sqrt()
    }
}

/// Lai's confidence sequence x̄_n ± ξ_n, the whole line before time m.
pub fn lai_cs(stats: &SampleStats, m: u64, alpha: f64) -> Result<CsInterval> {
    let threshold = lai_threshold(m, alpha)?;
    lai_cs_with(stats, &threshold)
}

pub fn lai_cs_with(stats: &SampleStats, threshold: &LaiThreshold) -> Result<CsInterval> {
    if stats.n() < threshold.m {
        return Ok(CsInterval::whole_line());
    }
    CsInterval::centered(stats.mean(), threshold.radius(stats))
}

/// ln(1 - q) for q = S_n² / ((n + c²) V_n), accurate at both ends.
fn log_one_minus_q(n: f64, c_sq: f64, sum: f64, sum_sq: f64, centered_ss: f64) -> f64 {
    let q = sum * sum / ((n + c_sq) * sum_sq);
    if q < 0.5 {
        (-q).ln_1p()
    } else {
        // (n + c²) V - S² = n Σ (X_i - x̄)² + c² V.
        (n * centered_ss + c_sq * sum_sq).ln() - ((n + c_sq) * sum_sq).ln()
    }
}

/// log G_n^{(c)}.
pub fn log_gauss_mix_martingale(stats: &SampleStats, c_sq: f64) -> Result<f64> {
    check_c_sq(c_sq)?;
    require_scale(stats)?;
    let n = stats.n() as f64;
    let l = log_one_minus_q(n, c_sq, stats.sum(), stats.sum_sq(), stats.centered_ss());
    Ok(0.5 * (c_sq / (n + c_sq)).ln() - 0.5 * n * l)
}

/// The Gaussian-mixture test martingale
/// G_n^{(c)} = √(c²/(n+c²)) ((n+c²)V_n / ((n+c²)V_n - S_n²))^{n/2}.
pub fn gauss_mix_martingale(stats: &SampleStats, c_sq: f64) -> Result<f64> {
    log_gauss_mix_martingale(stats, c_sq).map(f64::exp)
}

/// Closed-form confidence interval from G_n^{(c)}; the whole line while the
/// radius denominator is not positive.
pub fn gauss_mix_cs(stats: &SampleStats, c_sq: f64, alpha: f64) -> Result<CsInterval> {
    check_c_sq(c_sq)?;
    check_alpha(alpha)?;
    if stats.n() == 0 {
        return Ok(CsInterval::whole_line());
    }
    let n = stats.n() as f64;
    let ln_q = (2.0 * alpha.ln() + c_sq.ln() - (n + c_sq).ln()) / n;
    let q = ln_q.exp();
    let denominator = q * (n + c_sq) - c_sq;
    if !(denominator > 0.0) {
        return Ok(CsInterval::whole_line());
    }
    let numerator = -(n + c_sq) * ln_q.exp_m1();
    CsInterval::centered(stats.mean(), (numerator / denominator * stats.var_pop()).sqrt())
}

/// The c² that approximately minimizes the radius at time n:
/// c²/(n+c²) = α^{2/(n-1)} 2^{-n/(n-1)}.
pub fn optimal_c_sq(n: u64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if n < 2 {
        return Err(Error::domain("optimal_c_sq needs n >= 2"));
    }
    let nf = n as f64;
    let r = ((2.0 * alpha.ln() - nf * LN_2) / (nf - 1.0)).exp();
    if !(r < 1.0) {
        return Err(Error::domain(format!("no valid c_sq: ratio {r} is not below 1")));
    }
    Ok(nf * r / (1.0 - r))
}

/// log G_n^{(c-)}; -∞ when S_n ≤ 0.
pub fn log_semi_one_sided(stats: &SampleStats, c_sq: f64) -> Result<f64> {
    check_c_sq(c_sq)?;
    require_scale(stats)?;
    if stats.sum() <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let n = stats.n() as f64;
    // 2 G - 2 G|_{S=0} = 2 √(c²/(n+c²)) ((1-q)^{-n/2} - 1).
    let l = -0.5 * n * log_one_minus_q(n, c_sq, stats.sum(), stats.sum_sq(), stats.centered_ss());
    let log_excess = if l > 30.0 { l + (-(-l).exp()).ln_1p() } else { l.exp_m1().ln() };
    Ok(LN_2 + 0.5 * (c_sq / (n + c_sq)).ln() + log_excess)
}

/// The semi-one-sided e-process 2 G_n^{(c)} - 2 G_n^{(c)}|_{S_n ← S_n ∧ 0}.
pub fn semi_one_sided(stats: &SampleStats, c_sq: f64) -> Result<f64> {
    log_semi_one_sided(stats, c_sq).map(f64::exp)
}

/// log G^{(w²)} as a function of the mixing scale w, given n and
/// u = ln(1 - ·) inputs in standardized form (S/√V = r, Σ(X-x̄)²/V = k).
fn log_g_standardized(n: f64, r: f64, k: f64, c_sq: f64) -> f64 {
    let l = log_one_minus_q(n, c_sq, r, 1.0, k);
    0.5 * (c_sq / (n + c_sq)).ln() - 0.5 * n * l
}

fn jzs_settings() -> QuadratureSettings {
    QuadratureSettings::new(1e-300, 1e-11, 2000).expect("valid settings")
}

/// ln(1/B_n^{JZS}) through the precision mixture: a Cauchy prior on θ is a
/// N(0, 1/c²) prior with c² ~ χ²₁, so 1/B = ∫₀^∞ G^{(w²)} √(2/π) e^{-w²/2} dw.
fn log_jzs_evalue_standardized(n: u64, r: f64, k: f64) -> Result<f64> {
    if n == 1 {
        // G^{(c)}_1 = 1 for every c.
        return Ok(0.0);
    }
    let nf = n as f64;
    let log_weight = 0.5 * (2.0 / PI).ln();
    let log_integrand = |w: f64| log_g_standardized(nf, r, k, w * w) - 0.5 * w * w + log_weight;
    let mut peak_w = 1.0;
    let mut peak = f64::NEG_INFINITY;
    for i in 0..=240 {
        let w = (-18.0 + 0.125 * i as f64).exp();
        let v = log_integrand(w);
        if v > peak {
            peak = v;
            peak_w = w;
        }
    }
    let f = |w: f64| {
        if w <= 0.0 {
            0.0
        } else {
            (log_integrand(w) - peak).exp()
        }
    };
    let settings = jzs_settings();
    let mut total = 0.0;
    let mut lower = 0.0;
    for k in -8..=6 {
        let upper = peak_w * 2f64.powi(k);
        total += integrate(f, lower, upper, &settings)?;
        lower = upper;
    }
    total += integrate(f, lower, f64::INFINITY, &settings)?;
    Ok(peak + total.ln())
}

/// ln(1/B_n^{JZS}), the log of the JZS e-value, by the precision-mixture
/// route.
pub fn log_jzs_evalue(stats: &SampleStats) -> Result<f64> {
    require_scale(stats)?;
    let v = stats.sum_sq();
    log_jzs_evalue_standardized(stats.n(), stats.sum() / v.sqrt(), stats.centered_ss() / v)
}

/// The JZS Bayes factor B_n, with the Cauchy mixture of h_{θ,n} computed by
/// nested quadrature after the substitution θ = tan u.
pub fn jzs_bayes_factor(stats: &SampleStats) -> Result<f64> {
    require_scale(stats)?;
    let n = stats.n();
    let r = standardized_sum(stats);
    let k = stats.centered_ss() / stats.sum_sq();
    // Only used to normalize the outer integrand to order one.
    let reference = log_jzs_evalue(stats)?;
    let log_h = |theta: f64| -> Result<f64> {
        if theta == 0.0 {
            return Ok(0.0);
        }
        let si = SiIntegrand::new(n, r, k, theta);
        if si.log_upper_bound() < reference - 700.0 {
            return Ok(f64::NEG_INFINITY);
        }
        si.log_h()
    };
    let failure = std::cell::Cell::new(None);
    let f = |u: f64| {
        // The Cauchy density times the Jacobian of tan is exactly 1/π.
        match log_h(u.tan()) {
            Ok(l) => (l - reference).exp() / PI,
            Err(e) => {
                failure.set(Some(e.to_string()));
                f64::NAN
            }
        }
    };
    let nf = n as f64;
    let spread = nf - r * r;
    let theta_hat = if spread > 0.0 { r / spread.sqrt() } else { r.signum() * 1e12 };
    let mut breaks: Vec<f64> = (0..=64).map(|i| -0.5 * PI + PI * i as f64 / 64.0).collect();
    breaks.push(theta_hat.atan());
    breaks.sort_by(f64::total_cmp);
    let settings = jzs_settings();
    let mut total = 0.0;
    for pair in breaks.windows(2) {
        let piece = integrate(f, pair[0], pair[1], &settings);
        if let Some(msg) = failure.take() {
            return Err(Error::numerical(msg));
        }
        total += piece?;
    }
    Ok((-(reference + total.ln())).exp())
}

/// Squared standardized sum S_n²/V_n at which 1/B_n^{JZS} reaches
/// `threshold` with the sample spread as large as possible.
///
/// 1/B_n is increasing in S_n²/V_n, so a trajectory crosses at time n
/// exactly when S_n²/V_n is at least this value. `None` when the threshold
/// is unreachable at this n.
pub fn jzs_crossing_r_sq(n: u64, threshold: f64) -> Result<Option<f64>> {
    if !(threshold > 1.0) {
        return Ok(Some(0.0));
    }
    if n < 2 {
        return Ok(None);
    }
    let nf = n as f64;
    let target = threshold.ln();
    let at = |r_sq: f64| log_jzs_evalue_standardized(n, r_sq.sqrt(), 1.0 - r_sq / nf);
    let mut lo = 0.0;
    let mut hi;
    // Approach n geometrically; 1/B diverges as S²/V → n for n ≥ 2.
    let mut gap = 0.5 * nf;
    loop {
        let probe = nf - gap;
        if at(probe)? >= target {
            hi = probe;
            break;
        }
        lo = probe;
        gap *= 0.5;
        if gap < nf * 1e-15 {
            return Ok(None);
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-13 * nf {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if at(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "process", rename_all = "kebab-case")]
pub enum SiStatistic {
    LikelihoodRatio { theta: f64 },
    GaussMix { c_sq: f64 },
    SemiOneSided { c_sq: f64 },
    Lai,
    Jzs,
}

/// A scale-invariant process wrapped as a [`ProcessEvaluator`]; observations
/// are shifted by `mu0` on entry.
#[derive(Debug, Clone)]
pub struct SiProcess {
    stats: SampleStats,
    statistic: SiStatistic,
    mu0: f64,
}

impl SiProcess {
    pub fn new(statistic: SiStatistic, mu0: f64) -> Result<Self> {
        match statistic {
            SiStatistic::GaussMix { c_sq } | SiStatistic::SemiOneSided { c_sq } => check_c_sq(c_sq)?,
            SiStatistic::LikelihoodRatio { theta } if !theta.is_finite() => {
                return Err(Error::domain("theta must be finite"))
            }
            _ => {}
        }
        if !mu0.is_finite() {
            return Err(Error::domain("mu0 must be finite"));
        }
        Ok(Self {
            stats: SampleStats::new(),
            statistic,
            mu0,
        })
    }

    pub fn stats(&self) -> &SampleStats {
        &self.stats
    }
}

impl ProcessEvaluator for SiProcess {
    fn observe(&mut self, x: f64) -> Result<()> {
        self.stats.update(x - self.mu0)
    }

    fn log_value(&self) -> Result<f64> {
        if self.stats.n() == 0 {
            return Ok(match self.statistic {
                SiStatistic::Lai => f64::INFINITY,
                _ => 0.0,
            });
        }
        match self.statistic {
            SiStatistic::LikelihoodRatio { theta } => log_si_likelihood_ratio(theta, &self.stats),
            SiStatistic::GaussMix { c_sq } => log_gauss_mix_martingale(&self.stats, c_sq),
            SiStatistic::SemiOneSided { c_sq } => log_semi_one_sided(&self.stats, c_sq),
            SiStatistic::Lai => log_lai_ensm(&self.stats),
            SiStatistic::Jzs => log_jzs_evalue(&self.stats),
        }
    }

    fn kind(&self) -> ProcessKind {
        match self.statistic {
            SiStatistic::Lai => ProcessKind::ExtendedNsm,
            SiStatistic::SemiOneSided { .. } => ProcessKind::EProcess,
            _ => ProcessKind::Martingale,
        }
    }

    fn filtration(&self) -> Filtration {
        Filtration::ScaleInvariant
    }

    fn n(&self) -> u64 {
        self.stats.n()
    }
}

/// Gaussian-mixture confidence sequence.
#[derive(Debug, Clone)]
pub struct GaussMixCs {
    stats: SampleStats,
    c_sq: f64,
    alpha: f64,
}

impl GaussMixCs {
    pub fn new(c_sq: f64, alpha: f64) -> Result<Self> {
        check_c_sq(c_sq)?;
        check_alpha(alpha)?;
        Ok(Self {
            stats: SampleStats::new(),
            c_sq,
            alpha,
        })
    }
}

impl ConfidenceSequence for GaussMixCs {
    fn observe(&mut self, x: f64) -> Result<()> {
        self.stats.update(x)
    }

    fn interval(&self) -> Result<CsInterval> {
        gauss_mix_cs(&self.stats, self.c_sq, self.alpha)
    }

    fn n(&self) -> u64 {
        self.stats.n()
    }
}

/// Lai's confidence sequence.
#[derive(Debug, Clone)]
pub struct LaiCs {
    stats: SampleStats,
    threshold: LaiThreshold,
}

impl LaiCs {
    pub fn new(m: u64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            stats: SampleStats::new(),
            threshold: lai_threshold(m, alpha)?,
        })
    }

    pub fn threshold(&self) -> &LaiThreshold {
        &self.threshold
    }
}

impl ConfidenceSequence for LaiCs {
    fn observe(&mut self, x: f64) -> Result<()> {
        self.stats.update(x)
    }

    fn interval(&self) -> Result<CsInterval> {
        lai_cs_with(&self.stats, &self.threshold)
    }

    fn n(&self) -> u64 {
        self.stats.n()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::t_cdf;
    use crate::stats::{invert_to_cs, t_statistic};
    use proptest::prelude::*;

    fn stats(xs: &[f64]) -> SampleStats {
        SampleStats::from_slice(xs).unwrap()
    }

    fn shifted(xs: &[f64], mu: f64) -> SampleStats {
        stats(&xs.iter().map(|x| x - mu).collect::<Vec<_>>())
    }

    #[test]
    fn si_ratio_at_zero_is_one() {
        assert_eq!(si_likelihood_ratio(0.0, &stats(&[0.3, -2.0, 1.0])).unwrap(), 1.0);
        // Away from the shortcut, the quadrature reproduces Γ(n/2).
        let s = stats(&[0.3, -0.3]);
        assert!((si_likelihood_ratio(1e-300, &s).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn si_ratio_against_riemann_sum() {
        // θ = 1, X = (1, 1): h = e^{-1} ∫₀^∞ exp(-y + 2√y) dy.
        let s = stats(&[1.0, 1.0]);
        let h = si_likelihood_ratio(1.0, &s).unwrap();
        let steps = 4_000_000;
        let upper = 80.0;
        let dy = upper / steps as f64;
        let mut sum = 0.0;
        for i in 0..steps {
            let y = (i as f64 + 0.5) * dy;
            sum += (-y + 2.0 * y.sqrt()).exp();
        }
        let oracle = (-1.0f64).exp() * sum * dy;
        assert!(((h - oracle) / oracle).abs() < 1e-8, "{h} vs {oracle}");
    }

    #[test]
    fn si_ratio_sign_symmetry() {
        let xs = [0.4, 1.3, -0.2, 0.9];
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        for &theta in &[0.3, 1.7] {
            let a = si_likelihood_ratio(-theta, &stats(&xs)).unwrap();
            let b = si_likelihood_ratio(theta, &stats(&neg)).unwrap();
            assert!(((a - b) / a).abs() < 1e-12);
        }
    }

    #[test]
    fn si_ratio_handles_large_samples() {
        let xs: Vec<f64> = (0..2000).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 6.0 - 1.0).collect();
        let l = log_si_likelihood_ratio(0.5, &stats(&xs)).unwrap();
        assert!(l.is_finite() && l > 100.0);
    }

    #[test]
    fn lai_examples() {
        assert_eq!(lai_ensm(&stats(&[3.0])).unwrap(), f64::INFINITY);
        assert!((lai_ensm(&stats(&[1.0, -1.0])).unwrap() - PI.sqrt()).abs() < 1e-14);
        assert_eq!(lai_ensm(&stats(&[1.0, 1.0])).unwrap(), f64::INFINITY);
    }

    #[test]
    fn lai_threshold_examples() {
        let t = lai_threshold(2, 1.0).unwrap();
        assert_eq!((t.a, t.b), (0.0, 0.5));

        // Cauchy closed form for m = 2.
        let g = |a: f64| 2.0 * (0.5 - a.atan() / PI + a / (PI * (1.0 + a * a)));
        let (mut lo, mut hi) = (0.0, 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.1 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = lai_threshold(2, 0.1).unwrap();
        assert!((t.a - 0.5 * (lo + hi)).abs() < 1e-10);
        assert!((t.b - 0.5 * (1.0 + t.a * t.a).powi(2)).abs() < 1e-10 * t.b);

        assert!(lai_threshold(2, 0.05).unwrap().a > t.a);
        let t5 = lai_threshold(5, 0.05).unwrap();
        let df = 4.0;
        let bound = 2.0 * (1.0 - t_cdf(t5.a, df).unwrap() + t5.a * t_pdf(t5.a, df).unwrap());
        assert!((bound - 0.05).abs() < 1e-10);
        assert!(lai_threshold(1, 0.05).is_err());
    }

    #[test]
    fn lai_cs_examples() {
        let s = stats(&[4.0]);
        assert!(lai_cs(&s, 2, 0.05).unwrap().is_whole_line());
        let s = stats(&[1.0, -1.0]);
        let t = lai_threshold(2, 0.1).unwrap();
        let xi = ((2.0 * t.b).sqrt() - 1.0).sqrt();
        let cs = lai_cs(&s, 2, 0.1).unwrap();
        assert!((cs.upper - xi).abs() < 1e-12 && (cs.lower + xi).abs() < 1e-12);
        let cs = lai_cs(&stats(&[2.0, 2.0, 2.0]), 2, 0.1).unwrap();
        assert_eq!((cs.lower, cs.upper), (2.0, 2.0));
    }

    #[test]
    fn lai_cs_is_the_sublevel_set_of_h() {
        // At μ = x̄ ± ξ_n the ratio V_n / Σ(X_i - x̄)² of the shifted sample
        // equals 1 + ξ_n²/s_n², and (1 + ξ_n²/s_n²)^{n/2} = √(bn).
        let xs = [0.3, -1.1, 0.8, 2.0, 0.1];
        let t = lai_threshold(3, 0.05).unwrap();
        let cs = lai_cs_with(&stats(&xs), &t).unwrap();
        let s = stats(&xs);
        let n = 5.0;
        let ratio = |mu: f64| {
            let sh = shifted(&xs, mu);
            (sh.sum_sq() / sh.centered_ss()).powf(n / 2.0)
        };
        let target = (t.b * n).sqrt();
        assert!((ratio(cs.upper) - target).abs() < 1e-9 * target);
        assert!((ratio(cs.lower) - target).abs() < 1e-9 * target);
        assert!(cs.contains(s.mean()));
    }

    #[test]
    fn gauss_mix_examples() {
        for &c in &[0.1, 1.0, 50.0] {
            assert!((gauss_mix_martingale(&stats(&[-2.5]), c).unwrap() - 1.0).abs() < 1e-14);
        }
        let g = gauss_mix_martingale(&stats(&[1.0, 1.0]), 1.0).unwrap();
        assert!((g - 3f64.sqrt()).abs() < 1e-14);
        assert!(matches!(
            gauss_mix_martingale(&stats(&[0.0, 0.0]), 1.0),
            Err(Error::DegenerateSample(_))
        ));
    }

    fn mixture_by_quadrature(s: &SampleStats, c_sq: f64) -> f64 {
        let c = c_sq.sqrt();
        let settings = QuadratureSettings::new(1e-300, 1e-10, 2000).unwrap();
        let f = |theta: f64| {
            let prior = c / (2.0 * PI).sqrt() * (-0.5 * c_sq * theta * theta).exp();
            if prior == 0.0 {
                return 0.0;
            }
            prior * si_likelihood_ratio(theta, s).unwrap()
        };
        let sd = 1.0 / c;
        let mut total = 0.0;
        let cuts: Vec<f64> = (-12..=12).map(|k| k as f64 * sd).collect();
        total += integrate(f, f64::NEG_INFINITY, cuts[0], &settings).unwrap();
        for w in cuts.windows(2) {
            total += integrate(f, w[0], w[1], &settings).unwrap();
        }
        total + integrate(f, *cuts.last().unwrap(), f64::INFINITY, &settings).unwrap()
    }

    #[test]
    fn gauss_mix_is_a_mixture_of_si_ratios() {
        for (xs, c_sq) in [
            (vec![1.0, 1.0], 1.0),
            (vec![0.4, -1.2, 0.9, 2.2, 0.1], 0.25),
            (vec![1.5, 0.7, 2.1], 4.0),
        ] {
            let s = stats(&xs);
            let g = gauss_mix_martingale(&s, c_sq).unwrap();
            let q = mixture_by_quadrature(&s, c_sq);
            assert!(((g - q) / g).abs() < 1e-8, "{g} vs {q}");
        }
    }

    #[test]
    fn t_statistic_re_expressions() {
        let xs = [0.3, -1.1, 0.8, 2.0, 0.1, 0.7];
        let s = stats(&xs);
        let n = 6.0;
        let t = t_statistic(&s, 0.0).unwrap();
        let h = (2.0 * PI / n).sqrt() * (1.0 + t * t / (n - 1.0)).powf(n / 2.0);
        assert!(((lai_ensm(&s).unwrap() - h) / h).abs() < 1e-12);
        let c_sq = 0.7;
        let g = (c_sq / (n + c_sq)).sqrt()
            * (1.0 + n / ((n + c_sq) * (n - 1.0) / (t * t) + c_sq)).powf(n / 2.0);
        assert!(((gauss_mix_martingale(&s, c_sq).unwrap() - g) / g).abs() < 1e-12);
    }

    #[test]
    fn gauss_mix_cs_examples() {
        // Denominator (α²c²/(1+c²))(1+c²) - c² < 0 at n = 1.
        assert!(gauss_mix_cs(&stats(&[0.5]), 1.0, 0.05).unwrap().is_whole_line());

        let xs = [1.0, -1.0, 2.0];
        let cs = gauss_mix_cs(&stats(&xs), 1.0, 0.05).unwrap();
        let inv = invert_to_cs(
            |mu| gauss_mix_martingale(&shifted(&xs, mu), 1.0),
            0.05,
            stats(&xs).mean(),
            1.0,
        )
        .unwrap();
        assert!(cs.is_whole_line() == inv.is_whole_line());

        let xs = [1.0, -1.0, 2.0, 0.4, 0.9, 1.6];
        let cs = gauss_mix_cs(&stats(&xs), 1.0, 0.05).unwrap();
        let inv = invert_to_cs(
            |mu| gauss_mix_martingale(&shifted(&xs, mu), 1.0),
            0.05,
            stats(&xs).mean(),
            1.0,
        )
        .unwrap();
        assert!(cs.upper.is_finite());
        assert!((cs.upper - inv.upper).abs() < 1e-6 && (cs.lower - inv.lower).abs() < 1e-6);

        let cs = gauss_mix_cs(&stats(&[2.0; 10]), 1.0, 0.05).unwrap();
        assert_eq!((cs.lower, cs.upper), (2.0, 2.0));
    }

    #[test]
    fn small_prior_precision_starts_late() {
        // With c² = 0.01 the interval is trivial at n = 2 and finite at n = 3.
        let s2 = stats(&[0.1, 0.5]);
        let s3 = stats(&[0.1, 0.5, -0.2]);
        assert!(gauss_mix_cs(&s2, 0.01, 0.05).unwrap().is_whole_line());
        assert!(!gauss_mix_cs(&s3, 0.01, 0.05).unwrap().is_whole_line());
    }

    #[test]
    fn optimal_c_sq_examples() {
        let c = optimal_c_sq(2, 0.5).unwrap();
        assert!((c - 2.0 * 0.0625 / 0.9375).abs() < 1e-14);
        let big = optimal_c_sq(100_000, 0.999_999).unwrap();
        assert!((big / 100_000.0 - 1.0).abs() < 1e-3);
        assert!(optimal_c_sq(1, 0.05).is_err());

        let xs = [0.3, -1.1, 0.8, 2.0, 0.1];
        let s = stats(&xs);
        let alpha: f64 = 0.05;
        let n = 5.0;
        let c_sq = optimal_c_sq(5, alpha).unwrap();
        let cs = gauss_mix_cs(&s, c_sq, alpha).unwrap();
        let expected =
            ((alpha.powf(-2.0 / (n - 1.0)) * 2f64.powf(n / (n - 1.0)) - 2.0) * s.var_pop()).sqrt();
        assert!((cs.width() / 2.0 - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn semi_one_sided_examples() {
        assert_eq!(semi_one_sided(&stats(&[-1.0]), 1.0).unwrap(), 0.0);
        let v = semi_one_sided(&stats(&[0.7]), 1.0).unwrap();
        assert!((v - (2.0 - 2f64.sqrt())).abs() < 1e-14);
        let xs = [0.3, 1.1, -0.2, 0.9];
        let s = stats(&xs);
        let g = gauss_mix_martingale(&s, 2.0).unwrap();
        let expected = 2.0 * g - 2.0 * (2.0 / 6.0f64).sqrt();
        assert!((semi_one_sided(&s, 2.0).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn jzs_routes_agree() {
        for xs in [
            vec![1.0, -1.0],
            vec![0.3, 1.1, -0.2, 0.9, 0.5],
            vec![1.2, 0.8, 1.5, 1.1, 0.9, 1.3, 1.0, 0.7],
        ] {
            let s = stats(&xs);
            let fast = log_jzs_evalue(&s).unwrap();
            let nested = -jzs_bayes_factor(&s).unwrap().ln();
            assert!((fast - nested).abs() < 1e-7, "{fast} vs {nested}");
        }
    }

    #[test]
    fn jzs_is_sign_symmetric_and_trivial_at_one() {
        let xs = [0.3, 1.1, -0.2, 0.9];
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        let a = jzs_bayes_factor(&stats(&xs)).unwrap();
        let b = jzs_bayes_factor(&stats(&neg)).unwrap();
        assert!(((a - b) / a).abs() < 1e-9);
        assert!((jzs_bayes_factor(&stats(&[2.0])).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn jzs_crossing_boundary() {
        let n = 10;
        let r_sq = jzs_crossing_r_sq(n, 20.0).unwrap().unwrap();
        let at = |r2: f64| log_jzs_evalue_standardized(n, r2.sqrt(), 1.0 - r2 / n as f64).unwrap();
        assert!((at(r_sq) - 20f64.ln()).abs() < 1e-8);
        assert!(at(0.99 * r_sq) < 20f64.ln());
        assert_eq!(jzs_crossing_r_sq(1, 20.0).unwrap(), None);
        // The boundary, checked on an actual sample.
        let xs = [1.0, 1.1, 0.9, 1.05, 0.95, 1.0, 1.2, 0.8, 1.0, 1.0];
        let s = stats(&xs);
        let r2 = s.sum() * s.sum() / s.sum_sq();
        assert_eq!(r2 >= r_sq, log_jzs_evalue(&s).unwrap() >= 20f64.ln());
    }

    #[test]
    fn evaluator_contract() {
        let mut p = SiProcess::new(SiStatistic::Lai, 0.0).unwrap();
        assert_eq!(p.value().unwrap(), f64::INFINITY);
        p.observe(1.0).unwrap();
        p.observe(-1.0).unwrap();
        assert!((p.value().unwrap() - PI.sqrt()).abs() < 1e-14);
        assert_eq!(p.kind(), ProcessKind::ExtendedNsm);
        assert_eq!(p.filtration(), Filtration::ScaleInvariant);

        let mut g = SiProcess::new(SiStatistic::GaussMix { c_sq: 1.0 }, 1.0).unwrap();
        g.observe(2.0).unwrap();
        g.observe(2.0).unwrap();
        assert!((g.value().unwrap() - 3f64.sqrt()).abs() < 1e-14);
        assert!(SiProcess::new(SiStatistic::GaussMix { c_sq: 0.0 }, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn scale_invariance(xs in prop::collection::vec(-3f64..3.0, 2..12), lambda in 0.01f64..100.0) {
            let s = stats(&xs);
            prop_assume!(s.centered_ss() > 1e-6);
            let scaled = stats(&xs.iter().map(|x| x * lambda).collect::<Vec<_>>());
            let rel = |a: f64, b: f64| if a == b { 0.0 } else { ((a - b) / a).abs() };
            prop_assert!(rel(gauss_mix_martingale(&s, 1.0).unwrap(), gauss_mix_martingale(&scaled, 1.0).unwrap()) < 1e-10);
            prop_assert!(rel(lai_ensm(&s).unwrap(), lai_ensm(&scaled).unwrap()) < 1e-10);
            prop_assert!(rel(semi_one_sided(&s, 1.0).unwrap(), semi_one_sided(&scaled, 1.0).unwrap()) < 1e-10);
            prop_assert!(rel(si_likelihood_ratio(0.7, &s).unwrap(), si_likelihood_ratio(0.7, &scaled).unwrap()) < 1e-10);
            prop_assert!(rel(log_jzs_evalue(&s).unwrap().exp(), log_jzs_evalue(&scaled).unwrap().exp()) < 1e-10);
        }

        #[test]
        fn semi_one_sided_is_nonnegative(xs in prop::collection::vec(-3f64..3.0, 1..20), c in 0.01f64..50.0) {
            let s = stats(&xs);
            prop_assume!(s.sum_sq() > 0.0);
            prop_assert!(semi_one_sided(&s, c).unwrap() >= 0.0);
        }
    }
}
