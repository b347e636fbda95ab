//! Plug-in likelihood-ratio processes for the Gaussian mean.
//!
//! The numerator of every process here is the prequential likelihood
//! Π σ̃_{i-1}⁻¹ φ((X_i - μ̃_{i-1}) / σ̃_{i-1}) built from predictable
//! estimates; the denominator is the null likelihood maximized over the
//! nuisance variance (or fixed, for the Z-test).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{
    check_alpha, ConfidenceSequence, CsInterval, Filtration, ProcessEvaluator, ProcessKind,
    SampleStats,
};

/// Smallest variance estimate handed to the plug-in likelihood.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum EstimatorScheme {
    /// Running mean and population variance, starting from (0, 1).
    Empirical,
    /// Posterior means under a normal-inverse-gamma prior NΓ⁻¹(μ0, ν0, α0, β0).
    Nig { mu0: f64, nu0: f64, a0: f64, b0: f64 },
    /// A constant estimate that ignores the data.
    Fixed { mu: f64, sigma: f64 },
}

impl EstimatorScheme {
    fn validate(&self) -> Result<()> {
        match *self {
            Self::Empirical => Ok(()),
            Self::Nig { mu0, nu0, a0, b0 } => {
                if !mu0.is_finite() || !(nu0 > 0.0) || !(b0 > 0.0) || !b0.is_finite() {
                    return Err(Error::domain("NIG prior needs finite mu0 and nu0, b0 > 0"));
                }
                if !(a0 > 1.0) || !a0.is_finite() {
                    return Err(Error::domain(format!(
                        "NIG prior needs a0 > 1 so the variance posterior mean exists, got {a0}"
                    )));
                }
                Ok(())
            }
            Self::Fixed { mu, sigma } => {
                if !mu.is_finite() || !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::domain("fixed estimator needs finite mu and sigma > 0"));
                }
                Ok(())
            }
        }
    }
}

/// A predictable estimator of (μ, σ²).
#[derive(Debug, Clone, PartialEq)]
pub struct PluginEstimator {
    scheme: EstimatorScheme,
    stats: SampleStats,
    floored: bool,
}

impl PluginEstimator {
    pub fn new(scheme: EstimatorScheme) -> Result<Self> {
        scheme.validate()?;
        Ok(Self {
            scheme,
            stats: SampleStats::new(),
            floored: false,
        })
    }

    pub fn empirical() -> Self {
        Self::new(EstimatorScheme::Empirical).expect("empirical scheme is always valid")
    }

    pub fn scheme(&self) -> EstimatorScheme {
        self.scheme
    }

    /// Number of observations absorbed.
    pub fn n(&self) -> u64 {
        self.stats.n()
    }

    /// True once any emitted variance had to be raised to [`VARIANCE_FLOOR`].
    pub fn floor_hit(&self) -> bool {
        self.floored
    }

    /// Raw estimates (μ̃, σ̃²) before flooring.
    fn raw(&self) -> (f64, f64) {
        let n = self.stats.n() as f64;
        match self.scheme {
            EstimatorScheme::Empirical => {
                if self.stats.n() == 0 {
                    return (0.0, 1.0);
                }
                let var = self.stats.var_pop();
                (self.stats.mean(), if var > 0.0 { var } else { 1.0 })
            }
            EstimatorScheme::Nig { mu0, nu0, a0, b0 } => {
                let nu_n = nu0 + n;
                let mu_n = (nu0 * mu0 + self.stats.sum()) / nu_n;
                let a_n = a0 + 0.5 * n;
                let dev = self.stats.mean() - mu0;
                let b_n = b0 + 0.5 * self.stats.centered_ss() + n * nu0 * dev * dev / (2.0 * nu_n);
                (mu_n, b_n / (a_n - 1.0))
            }
            EstimatorScheme::Fixed { mu, sigma } => (mu, sigma * sigma),
        }
    }

    /// Estimates (μ̃, σ̃²) for the next observation.
    pub fn current(&self) -> (f64, f64) {
        let (mu, var) = self.raw();
        (mu, var.max(VARIANCE_FLOOR))
    }

    pub fn update(&mut self, x: f64) -> Result<()> {
        self.stats.update(x)?;
        if self.raw().1 < VARIANCE_FLOOR {
            self.floored = true;
        }
        Ok(())
    }
}

/// Absorbs `x` and returns the estimates for the following observation.
pub fn estimator_step(est: &PluginEstimator, x: f64) -> Result<(f64, f64, PluginEstimator)> {
    let mut next = est.clone();
    next.update(x)?;
    let (mu, var) = next.current();
    Ok((mu, var.sqrt(), next))
}

/// Running state shared by every plug-in process: the post-burn-in sample,
/// the log prequential likelihood (without the 2π constant) and the
/// estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct UiProcessState {
    stats: SampleStats,
    log_plugin_product: f64,
    estimator: PluginEstimator,
    mu0: f64,
    burn_in: u64,
    seen: u64,
}

impl UiProcessState {
    pub fn new(estimator: PluginEstimator, mu0: f64, burn_in: u64) -> Result<Self> {
        if !mu0.is_finite() {
            return Err(Error::domain("mu0 must be finite"));
        }
        Ok(Self {
            stats: SampleStats::new(),
            log_plugin_product: 0.0,
            estimator,
            mu0,
            burn_in,
            seen: 0,
        })
    }

    pub fn observe(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::domain(format!("observation must be finite, got {x}")));
        }
        if self.seen >= self.burn_in {
            let (mu, var) = self.estimator.current();
            let z = x - mu;
            self.log_plugin_product -= 0.5 * (var.ln() + z * z / var);
            self.stats.update(x)?;
        }
        self.estimator.update(x)?;
        self.seen += 1;
        Ok(())
    }

    /// Observations that entered the process (burn-in excluded).
    pub fn n(&self) -> u64 {
        self.stats.n()
    }

    /// All observations consumed, burn-in included.
    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn stats(&self) -> &SampleStats {
        &self.stats
    }

    pub fn estimator(&self) -> &PluginEstimator {
        &self.estimator
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    /// Σ [-ln σ̃_{i-1} - ((X_i - μ̃_{i-1}) / σ̃_{i-1})² / 2].
    pub fn log_plugin_product(&self) -> f64 {
        self.log_plugin_product
    }

    fn ss_about(&self, mu: f64) -> f64 {
        let d = self.stats.mean() - mu;
        self.stats.centered_ss() + self.stats.n() as f64 * d * d
    }

    /// log ℓ_n^{μ,σ²}, the plug-in likelihood over N(μ, σ²).
    pub fn log_z_martingale(&self, mu: f64, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        if self.n() == 0 {
            return Ok(0.0);
        }
        let n = self.n() as f64;
        Ok(self.log_plugin_product + n * sigma.ln() + self.ss_about(mu) / (2.0 * sigma * sigma))
    }

    /// log of the infimum of ℓ_n^{μ,σ²} over μ ≤ μ0.
    pub fn log_z_one_sided(&self, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        if self.n() == 0 {
            return Ok(0.0);
        }
        let closest = self.stats.mean().min(self.mu0);
        self.log_z_martingale(closest, sigma)
    }

    fn log_t_from_ss(&self, ss: f64) -> f64 {
        if self.n() == 0 {
            return 0.0;
        }
        if !(ss > 0.0) {
            return f64::NEG_INFINITY;
        }
        let n = self.n() as f64;
        0.5 * n * ((ss / n).ln() + 1.0) + self.log_plugin_product
    }

    /// log R_n^{μ}: only the squared-deviation term is shifted by μ.
    pub fn log_t_eprocess_at(&self, mu: f64) -> f64 {
        self.log_t_from_ss(self.ss_about(mu))
    }

    /// log R_n^{μ0}.
    pub fn log_t_eprocess(&self) -> f64 {
        self.log_t_eprocess_at(self.mu0)
    }

    /// log R_n^-, for the null μ ≤ μ0.
    pub fn log_t_one_sided(&self) -> f64 {
        let above = (self.stats.mean() - self.mu0).max(0.0);
        let ss = self.stats.centered_ss() + self.n() as f64 * above * above;
        self.log_t_from_ss(ss)
    }

    /// W_n = α^{-2/n} e^{-1} exp(Σ [ln σ̃²_{i-1} + z_i²] / n).
    pub fn w_n(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        if self.n() == 0 {
            return Ok(f64::INFINITY);
        }
        let n = self.n() as f64;
        Ok((-2.0 * alpha.ln() / n - 1.0 - 2.0 * self.log_plugin_product / n).exp())
    }

    /// The interval {μ : R_n^μ < 1/α} = x̄ ± √(x̄² - V̄ + W_n).
    ///
    /// Should the radicand be negative the set is empty; the point x̄ is
    /// returned in that case.
    pub fn cs(&self, alpha: f64) -> Result<CsInterval> {
        let w = self.w_n(alpha)?;
        if w.is_infinite() {
            return Ok(CsInterval::whole_line());
        }
        let radicand = w - self.stats.var_pop();
        CsInterval::centered(self.stats.mean(), radicand.max(0.0).sqrt())
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

pub fn ui_z_martingale(state: &UiProcessState, mu: f64, sigma: f64) -> Result<f64> {
    state.log_z_martingale(mu, sigma).map(f64::exp)
}

pub fn ui_z_one_sided(state: &UiProcessState, sigma: f64) -> Result<f64> {
    state.log_z_one_sided(sigma).map(f64::exp)
}

pub fn ui_t_eprocess(state: &UiProcessState) -> f64 {
    state.log_t_eprocess().exp()
}

pub fn ui_t_one_sided(state: &UiProcessState) -> f64 {
    state.log_t_one_sided().exp()
}

pub fn ui_cs(state: &UiProcessState, alpha: f64) -> Result<CsInterval> {
    state.cs(alpha)
}

/// One-observation interval X₁ ± (u/α) exp((X₁² - 1)/2); u = 1 unless a
/// uniform draw is supplied for the randomized version.
pub fn one_obs_ci(x1: f64, alpha: f64, u: Option<f64>) -> Result<CsInterval> {
    check_alpha(alpha)?;
    if !x1.is_finite() {
        return Err(Error::domain("observation must be finite"));
    }
    let u = match u {
        None => 1.0,
        Some(u) if u > 0.0 && u <= 1.0 => u,
        Some(u) => return Err(Error::domain(format!("uniform draw must lie in (0, 1], got {u}"))),
    };
    // Same operation order as the plug-in interval at n = 1 with estimate (0, 1).
    CsInterval::centered(x1, u * (-2.0 * alpha.ln() - 1.0 + x1 * x1).exp().sqrt())
}

/// Which plug-in statistic a [`UiProcess`] reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "statistic", rename_all = "kebab-case")]
pub enum UiStatistic {
    TTwoSided,
    TOneSided,
    ZMartingale { mu: f64, sigma: f64 },
    ZOneSided { sigma: f64 },
}

/// A plug-in process wrapped as a [`ProcessEvaluator`].
#[derive(Debug, Clone)]
pub struct UiProcess {
    state: UiProcessState,
    statistic: UiStatistic,
}

impl UiProcess {
    pub fn new(state: UiProcessState, statistic: UiStatistic) -> Result<Self> {
        match statistic {
            UiStatistic::ZMartingale { sigma, .. } | UiStatistic::ZOneSided { sigma } => {
                check_sigma(sigma)?
            }
            _ => {}
        }
        Ok(Self { state, statistic })
    }

    pub fn state(&self) -> &UiProcessState {
        &self.state
    }
}

impl ProcessEvaluator for UiProcess {
    fn observe(&mut self, x: f64) -> Result<()> {
        self.state.observe(x)
    }

    fn log_value(&self) -> Result<f64> {
        match self.statistic {
            UiStatistic::TTwoSided => Ok(self.state.log_t_eprocess()),
            UiStatistic::TOneSided => Ok(self.state.log_t_one_sided()),
            UiStatistic::ZMartingale { mu, sigma } => self.state.log_z_martingale(mu, sigma),
            UiStatistic::ZOneSided { sigma } => self.state.log_z_one_sided(sigma),
        }
    }

    fn kind(&self) -> ProcessKind {
        match self.statistic {
            UiStatistic::ZMartingale { .. } => ProcessKind::Martingale,
            _ => ProcessKind::EProcess,
        }
    }

    fn filtration(&self) -> Filtration {
        Filtration::Canonical
    }

    fn n(&self) -> u64 {
        self.state.seen()
    }
}

/// The plug-in confidence sequence as a [`ConfidenceSequence`].
#[derive(Debug, Clone)]
pub struct UiCs {
    state: UiProcessState,
    alpha: f64,
}

impl UiCs {
    pub fn new(state: UiProcessState, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { state, alpha })
    }
}

impl ConfidenceSequence for UiCs {
    fn observe(&mut self, x: f64) -> Result<()> {
        self.state.observe(x)
    }

    fn interval(&self) -> Result<CsInterval> {
        self.state.cs(self.alpha)
    }

    fn n(&self) -> u64 {
        self.state.seen()
    }
}
