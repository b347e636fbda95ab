//! Comparison methods: stitched plug-in t confidence sequence, median
//! confidence sequence with its sign-test supermartingales, and the
//! fixed-sample t interval.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun::{gauss_cdf, log_beta, riemann_zeta, t_upper_quantile, wbar, Branch};
use crate::stats::{
    check_alpha, ConfidenceSequence, CsInterval, Filtration, ProcessEvaluator, ProcessKind,
    SampleStats,
};

/// Stitching parameters: epoch growth η > 0 and zeta exponent s > 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StitchParams {
    pub eta: f64,
    pub s: f64,
}

impl Default for StitchParams {
    fn default() -> Self {
        Self { eta: 0.5, s: 1.25 }
    }
}

impl StitchParams {
    pub fn new(eta: f64, s: f64) -> Result<Self> {
        let p = Self { eta, s };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::domain(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.s > 1.0) || !self.s.is_finite() {
            return Err(Error::domain(format!("s must exceed 1, got {}", self.s)));
        }
        Ok(())
    }
}

/// W̄₀(1 + 2(1+η)/(n-1) (ln(ζ(s)/α') + s ln(1 + ln(n-1)/ln(1+η)))) - 1/(n-1),
/// the denominator of the stitched variance bound at level α'.
fn variance_denominator(n: u64, level: f64, params: &StitchParams) -> Result<f64> {
    let m = (n - 1) as f64;
    let log_term = params.s * (m.ln() / params.eta.ln_1p()).ln_1p();
    let arg = 1.0 + 2.0 * (1.0 + params.eta) / m * ((riemann_zeta(params.s)? / level).ln() + log_term);
    Ok(wbar(Branch::Principal, arg)? - 1.0 / m)
}

/// Upper confidence sequence [0, s_n² / (W̄₀(...) - 1/(n-1))] for σ².
pub fn variance_upper_cs(stats: &SampleStats, alpha: f64, params: &StitchParams) -> Result<CsInterval> {
    check_alpha(alpha)?;
    params.validate()?;
    if stats.n() < 2 {
        return Err(Error::domain("variance bound needs at least two observations"));
    }
    let denominator = variance_denominator(stats.n(), alpha, params)?;
    if !(denominator > 0.0) {
        return CsInterval::new(0.0, f64::INFINITY);
    }
    CsInterval::new(0.0, stats.var_pop() / denominator)
}

/// W̄₋₁(1 + 2 ln(1/α') + 2 ln ζ(s) + 2s(1 - ln 2s) + 2s ln(2s + ln n)).
fn mean_numerator(n: u64, level: f64, s: f64) -> Result<f64> {
    let arg = 1.0 - 2.0 * level.ln()
        + 2.0 * riemann_zeta(s)?.ln()
        + 2.0 * s * (1.0 - (2.0 * s).ln())
        + 2.0 * s * (2.0 * s + (n as f64).ln()).ln();
    wbar(Branch::Lower, arg)
}

/// Stitched normal-mixture confidence sequence for the mean with known σ.
pub fn known_var_mix_cs(stats: &SampleStats, sigma: f64, alpha: f64, s: f64) -> Result<CsInterval> {
    check_alpha(alpha)?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain("sigma must be positive"));
    }
    if !(s > 1.0) {
        return Err(Error::domain("s must exceed 1"));
    }
    if stats.n() == 0 {
        return Ok(CsInterval::whole_line());
    }
    let w = mean_numerator(stats.n(), alpha, s)?;
    CsInterval::centered(stats.mean(), sigma * (w / stats.n() as f64).sqrt())
}

/// The plug-in t confidence sequence: the variance bound at α/2 substituted
/// into the known-variance sequence at α/2. The whole line until the
/// variance denominator turns positive.
pub fn plugin_t_cs(stats: &SampleStats, alpha: f64, params: &StitchParams) -> Result<CsInterval> {
    check_alpha(alpha)?;
    params.validate()?;
    if stats.n() < 2 {
        return Ok(CsInterval::whole_line());
    }
    let half = 0.5 * alpha;
    let denominator = variance_denominator(stats.n(), half, params)?;
    if !(denominator > 0.0) {
        return Ok(CsInterval::whole_line());
    }
    let numerator = mean_numerator(stats.n(), half, params.s)?;
    let n = stats.n() as f64;
    CsInterval::centered(stats.mean(), (stats.var_pop() / n * numerator / denominator).sqrt())
}

/// First n at which the plug-in t sequence is finite.
pub fn plugin_t_n_min(alpha: f64, params: &StitchParams) -> Result<u64> {
    check_alpha(alpha)?;
    params.validate()?;
    let mut n = 2;
    while !(variance_denominator(n, 0.5 * alpha, params)? > 0.0) {
        n += 1;
        if n > 100_000_000 {
            return Err(Error::numerical("plug-in t sequence never becomes finite"));
        }
    }
    Ok(n)
}

/// ln((e^{x} + e^{-x})/2) without overflow.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// log B_n^λ = λ(#{X_i > 0} - n/2) - n ln cosh(λ/2).
pub fn log_median_sign_supermartingale(stats: &SampleStats, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::domain("lambda must be finite"));
    }
    let n = stats.n() as f64;
    Ok(lambda * (stats.pos_count() as f64 - 0.5 * n) - n * ln_cosh(0.5 * lambda))
}

/// The sign-test supermartingale B_n^λ for the null "median = 0".
pub fn median_sign_supermartingale(stats: &SampleStats, lambda: f64) -> Result<f64> {
    log_median_sign_supermartingale(stats, lambda).map(f64::exp)
}

/// log B_n^{(a,b)} = ln B(a + #pos, b + #nonpos) + n ln 2 - ln B(a, b).
pub fn log_median_betabinom(stats: &SampleStats, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::domain("beta-binomial parameters must be positive"));
    }
    let pos = stats.pos_count() as f64;
    let n = stats.n() as f64;
    Ok(log_beta(a + pos, b + n - pos)? + n * LN_2 - log_beta(a, b)?)
}

/// The beta-binomial mixture of sign-test supermartingales.
pub fn median_betabinom(stats: &SampleStats, a: f64, b: f64) -> Result<f64> {
    log_median_betabinom(stats, a, b).map(f64::exp)
}

/// Boundary f_n of the median confidence sequence.
pub fn median_boundary(n: u64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if n == 0 {
        return Ok(f64::INFINITY);
    }
    let nf = n as f64;
    let ell = (1.4 * (2.1 * nf).ln().ln() + (10.0 / alpha).ln()) / nf;
    Ok(0.75 * ell.sqrt() + 0.8 * ell)
}

/// Q̂_n(p) = sup{x : F̂_n(x) ≤ p} on ascending data.
fn quantile_upper_sup(sorted: &[f64], p: f64) -> f64 {
    if p < 0.0 {
        return f64::NEG_INFINITY;
    }
    let k = (sorted.len() as f64 * p).floor() as usize;
    sorted.get(k).copied().unwrap_or(f64::INFINITY)
}

/// Q̂_n⁻(p) = sup{x : F̂_n(x) < p} on ascending data.
fn quantile_strict_sup(sorted: &[f64], p: f64) -> f64 {
    let np = sorted.len() as f64 * p;
    if np <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let j = np.ceil() as usize - 1;
    sorted.get(j).copied().unwrap_or(f64::INFINITY)
}

/// [Q̂_n(1/2 - f_n), Q̂_n⁻(1/2 + f_n)]; the whole line while f_n ≥ 1/2.
pub fn median_cs(stats: &SampleStats, alpha: f64) -> Result<CsInterval> {
    let sorted = stats
        .sorted()
        .ok_or_else(|| Error::domain("median_cs needs a sample with retention enabled"))?;
    let f = median_boundary(stats.n(), alpha)?;
    if f >= 0.5 {
        return Ok(CsInterval::whole_line());
    }
    CsInterval::new(quantile_upper_sup(sorted, 0.5 - f), quantile_strict_sup(sorted, 0.5 + f))
}

/// Fixed-sample t interval x̄_n ± √((nV_n - S_n²)/(n²(n-1))) t_{1-α/2}(n-1).
/// Valid only at a single prespecified n.
pub fn classical_t_ci(stats: &SampleStats, alpha: f64) -> Result<CsInterval> {
    check_alpha(alpha)?;
    if stats.n() < 2 {
        return Err(Error::domain("the t interval needs at least two observations"));
    }
    let n = stats.n() as f64;
    let se = (stats.centered_ss() / (n * (n - 1.0))).sqrt();
    CsInterval::centered(stats.mean(), se * t_upper_quantile(0.5 * alpha, n - 1.0)?)
}

/// Almost-sure growth rate of the beta-binomial median test under a
/// standardized effect θ: ln(Φ(θ)^Φ(θ) Φ(-θ)^Φ(-θ)) + ln 2.
pub fn median_epower(theta: f64) -> f64 {
    let p = gauss_cdf(theta);
    let q = gauss_cdf(-theta);
    let xlogx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    xlogx(p) + xlogx(q) + LN_2
}

/// Optimal growth rate ½ ln(1 + θ²).
pub fn optimal_epower(theta: f64) -> f64 {
    0.5 * (theta * theta).ln_1p()
}

/// Relative efficiency of the median test near θ = 0: the ratio of the
/// second derivatives at zero of [`median_epower`] and [`optimal_epower`],
/// each by a central difference with step 10⁻³.
pub fn are_betabinom() -> f64 {
    let h = 1e-3;
    let second = |f: &dyn Fn(f64) -> f64| (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
    second(&median_epower) / second(&optimal_epower)
}

/// Which median process a [`MedianProcess`] reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "process", rename_all = "kebab-case")]
pub enum MedianStatistic {
    Sign { lambda: f64 },
    BetaBinomial { a: f64, b: f64 },
}

/// Sign-test supermartingales for "median = μ0" as a [`ProcessEvaluator`].
#[derive(Debug, Clone)]
pub struct MedianProcess {
    stats: SampleStats,
    statistic: MedianStatistic,
    mu0: f64,
}

impl MedianProcess {
    pub fn new(statistic: MedianStatistic, mu0: f64) -> Result<Self> {
        match statistic {
            MedianStatistic::Sign { lambda } if !lambda.is_finite() => {
                return Err(Error::domain("lambda must be finite"))
            }
            MedianStatistic::BetaBinomial { a, b } if !(a > 0.0 && b > 0.0) => {
                return Err(Error::domain("beta-binomial parameters must be positive"))
            }
            _ => {}
        }
        Ok(Self {
            stats: SampleStats::new(),
            statistic,
            mu0,
        })
    }
}

impl ProcessEvaluator for MedianProcess {
    fn observe(&mut self, x: f64) -> Result<()> {
        self.stats.update(x - self.mu0)
    }

    fn log_value(&self) -> Result<f64> {
        match self.statistic {
            MedianStatistic::Sign { lambda } => log_median_sign_supermartingale(&self.stats, lambda),
            MedianStatistic::BetaBinomial { a, b } => log_median_betabinom(&self.stats, a, b),
        }
    }

    fn kind(&self) -> ProcessKind {
        ProcessKind::EProcess
    }

    fn filtration(&self) -> Filtration {
        Filtration::Canonical
    }

    fn n(&self) -> u64 {
        self.stats.n()
    }
}

/// The plug-in t confidence sequence.
#[derive(Debug, Clone)]
pub struct PluginTCs {
    stats: SampleStats,
    alpha: f64,
    params: StitchParams,
}

impl PluginTCs {
    pub fn new(alpha: f64, params: StitchParams) -> Result<Self> {
        check_alpha(alpha)?;
        params.validate()?;
        Ok(Self {
            stats: SampleStats::new(),
            alpha,
            params,
        })
    }
}

impl ConfidenceSequence for PluginTCs {
    fn observe(&mut self, x: f64) -> Result<()> {
        self.stats.update(x)
    }

    fn interval(&self) -> Result<CsInterval> {
        plugin_t_cs(&self.stats, self.alpha, &self.params)
    }

    fn n(&self) -> u64 {
        self.stats.n()
    }
}

/// The median confidence sequence.
#[derive(Debug, Clone)]
pub struct MedianCs {
    stats: SampleStats,
    alpha: f64,
}

impl MedianCs {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            stats: SampleStats::with_retention(),
            alpha,
        })
    }
}

impl ConfidenceSequence for MedianCs {
    fn observe(&mut self, x: f64) -> Result<()> {
        self.stats.update(x)
    }

    fn interval(&self) -> Result<CsInterval> {
        median_cs(&self.stats, self.alpha)
    }

    fn n(&self) -> u64 {
        self.stats.n()
    }
}

/// The fixed-sample t interval recomputed at each n; not time-uniform.
#[derive(Debug, Clone)]
pub struct ClassicalTCi {
    stats: SampleStats,
    alpha: f64,
}

impl ClassicalTCi {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            stats: SampleStats::new(),
            alpha,
        })
    }
}

impl ConfidenceSequence for ClassicalTCi {
    fn observe(&mut self, x: f64) -> Result<()> {
        self.stats.update(x)
    }

    fn interval(&self) -> Result<CsInterval> {
        if self.stats.n() < 2 {
            return Ok(CsInterval::whole_line());
        }
        classical_t_ci(&self.stats, self.alpha)
    }

    fn anytime_valid(&self) -> bool {
        false
    }

    fn n(&self) -> u64 {
        self.stats.n()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{integrate, QuadratureSettings};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn stats(xs: &[f64]) -> SampleStats {
        SampleStats::from_slice(xs).unwrap()
    }

    fn retained(xs: &[f64]) -> SampleStats {
        let mut s = SampleStats::with_retention();
        for &x in xs {
            s.update(x).unwrap();
        }
        s
    }

    /// W̄₀ by bisection on u - ln u = y over (0, 1].
    fn wbar0_oracle(y: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - mid.ln() > y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn variance_bound_examples() {
        let p = StitchParams::default();
        let cs = variance_upper_cs(&stats(&[0.1, 0.4]), 0.05, &p).unwrap();
        assert_eq!((cs.lower, cs.upper), (0.0, f64::INFINITY));

        let xs: Vec<f64> = (0..100).map(|i| ((i * 37) % 17) as f64 / 5.0).collect();
        let s = stats(&xs);
        let zeta = riemann_zeta(1.25).unwrap();
        let arg = 1.0 + 3.0 / 99.0 * ((zeta / 0.05).ln() + 1.25 * (99f64.ln() / 1.5f64.ln()).ln_1p());
        let expected = s.var_pop() / (wbar0_oracle(arg) - 1.0 / 99.0);
        let cs = variance_upper_cs(&s, 0.05, &p).unwrap();
        assert!(((cs.upper - expected) / expected).abs() < 1e-9);

        let big: Vec<f64> = (0..2_000_000).map(|i| (i % 2) as f64).collect();
        let s = stats(&big);
        let cs = variance_upper_cs(&s, 0.05, &p).unwrap();
        assert!(cs.upper / s.var_pop() < 1.01 && cs.upper > s.var_pop());
    }

    #[test]
    fn known_variance_examples() {
        let alpha: f64 = 0.05;
        let s = 1.25;
        let arg = 1.0 - 2.0 * alpha.ln() + 2.0 * riemann_zeta(s).unwrap().ln()
            + 2.0 * s * (1.0 - (2.0 * s).ln())
            + 2.0 * s * (2.0 * s).ln();
        let cs = known_var_mix_cs(&stats(&[0.3]), 2.0, alpha, s).unwrap();
        let u = (cs.upper - 0.3) * (cs.upper - 0.3) / 4.0;
        assert!(u >= 1.0 && (u - u.ln() - arg).abs() < 1e-10);

        let r1 = known_var_mix_cs(&stats(&[0.0; 100]), 1.0, alpha, s).unwrap().width();
        let r4 = known_var_mix_cs(&stats(&[0.0; 400]), 1.0, alpha, s).unwrap().width();
        // Only the slowly varying ln ln n term breaks the exact 1/√n scaling.
        assert!(r4 < r1 / 2.0 * 1.05 && r4 > r1 / 2.0);
    }

    #[test]
    fn plugin_examples() {
        let p = StitchParams::default();
        let n_min = plugin_t_n_min(0.05, &p).unwrap();
        assert!(n_min > 2);
        let xs: Vec<f64> = (0..n_min).map(|i| (i % 3) as f64).collect();
        assert!(plugin_t_cs(&stats(&xs[..n_min as usize - 1]), 0.05, &p).unwrap().is_whole_line());
        assert!(!plugin_t_cs(&stats(&xs), 0.05, &p).unwrap().is_whole_line());

        let xs: Vec<f64> = (0..500).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let a = plugin_t_cs(&stats(&xs), 0.05, &p).unwrap();
        let b = plugin_t_cs(&stats(&xs), 0.025, &p).unwrap();
        assert!(b.width() > a.width());
        assert!(a.contains(stats(&xs).mean()));
    }

    #[test]
    fn sign_supermartingale_examples() {
        assert_eq!(median_sign_supermartingale(&stats(&[1.0, -2.0, 3.0]), 0.0).unwrap(), 1.0);
        let v = median_sign_supermartingale(&stats(&[0.4]), 3f64.ln()).unwrap();
        assert!((v - 1.5).abs() < 1e-14);
        assert!(median_sign_supermartingale(&stats(&[-1.0, -0.5]), 0.7).unwrap() < 1.0);
        assert!(log_median_sign_supermartingale(&stats(&[1.0; 10]), 2000.0).unwrap().is_finite());
    }

    #[test]
    fn betabinom_examples() {
        assert!((median_betabinom(&stats(&[0.3]), 1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        let v = median_betabinom(&stats(&[0.3, 2.0]), 1.0, 1.0).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-14);
        assert_eq!(median_betabinom(&stats(&[]), 2.0, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn betabinom_is_a_beta_mixture_of_sign_processes() {
        // λ = ln(p/(1-p)) makes B_n^λ = (2p)^k (2(1-p))^{n-k}.
        let settings = QuadratureSettings::new(1e-300, 1e-12, 1000).unwrap();
        for &(n, k, a, b) in &[(5u64, 3u64, 1.0, 1.0), (12, 2, 0.5, 2.0), (30, 21, 3.0, 0.7)] {
            let xs: Vec<f64> = (0..n).map(|i| if i < k { 1.0 } else { -1.0 }).collect();
            let s = stats(&xs);
            let ln_norm = log_beta(a, b).unwrap();
            let f = |p: f64| {
                let lambda = (p / (1.0 - p)).ln();
                let density = ((a - 1.0) * p.ln() + (b - 1.0) * (-p).ln_1p() - ln_norm).exp();
                density * median_sign_supermartingale(&s, lambda).unwrap()
            };
            let oracle = integrate(f, 0.0, 1.0, &settings).unwrap();
            let v = median_betabinom(&s, a, b).unwrap();
            assert!(((v - oracle) / v).abs() < 1e-8, "{v} vs {oracle}");
        }
    }

    #[test]
    fn median_boundary_example() {
        let f = median_boundary(100, 0.05).unwrap();
        let ell: f64 = (1.4 * 210f64.ln().ln() + 200f64.ln()) / 100.0;
        assert!((ell - 0.07645).abs() < 1e-5);
        assert!((f - 0.2685).abs() < 1e-4);
    }

    #[test]
    fn median_cs_examples() {
        assert!(median_cs(&retained(&[1.0, 2.0, 3.0]), 0.05).unwrap().is_whole_line());
        let cs = median_cs(&retained(&[5.0; 200]), 0.05).unwrap();
        assert_eq!((cs.lower, cs.upper), (5.0, 5.0));
        assert!(median_cs(&stats(&[1.0]), 0.05).is_err());

        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let cs = median_cs(&retained(&xs), 0.05).unwrap();
        // n(1/2 - f) = 23.1 and n(1/2 + f) = 76.9.
        assert_eq!((cs.lower, cs.upper), (23.0, 76.0));
    }

    #[test]
    fn quantile_conventions_with_ties() {
        let sorted = [1.0, 2.0, 2.0, 2.0, 3.0];
        // F̂(x) ≤ 0.2 holds for x < 2, so the supremum is 2.
        assert_eq!(quantile_upper_sup(&sorted, 0.2), 2.0);
        // F̂(x) < 0.2 holds only for x < 1.
        assert_eq!(quantile_strict_sup(&sorted, 0.2), 1.0);
        assert_eq!(quantile_upper_sup(&sorted, 1.0), f64::INFINITY);
        assert_eq!(quantile_strict_sup(&sorted, 1.0), 3.0);
        assert_eq!(quantile_strict_sup(&sorted, 1.1), f64::INFINITY);
        assert_eq!(quantile_strict_sup(&sorted, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn classical_examples() {
        let cs = classical_t_ci(&stats(&[0.0, 2.0]), 0.05).unwrap();
        assert!((cs.upper - 1.0 - (0.475 * PI).tan()).abs() < 1e-9);
        assert!((cs.upper - 1.0 - 12.7062).abs() < 1e-4);
        let narrow = classical_t_ci(&stats(&[0.0, 2.0, 1.0]), 0.999_999).unwrap();
        assert!(narrow.width() < 1e-5);
        assert_eq!(classical_t_ci(&stats(&[1.0, 1.0]), 0.05).unwrap().width(), 0.0);
        assert!(!ClassicalTCi::new(0.05).unwrap().anytime_valid());
    }

    #[test]
    fn epower_examples() {
        assert!(median_epower(0.0).abs() < 1e-16);
        assert!((median_epower(1.0) - 0.255_713_939_632_826).abs() < 1e-12);
        // Second derivatives at zero: 2/π for the median test, 1 for the bound.
        assert!((are_betabinom() - 2.0 / PI).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn median_cs_is_monotone_equivariant(xs in prop::collection::vec(-5f64..5.0, 150..300)) {
            let a = median_cs(&retained(&xs), 0.05).unwrap();
            let cubed: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
            let b = median_cs(&retained(&cubed), 0.05).unwrap();
            prop_assert_eq!(b.lower, a.lower.powi(3));
            prop_assert_eq!(b.upper, a.upper.powi(3));
            let sorted = retained(&xs).sorted().unwrap().to_vec();
            let median = sorted[sorted.len() / 2];
            prop_assert!(a.lower <= median && median <= a.upper);
        }
    }
}
