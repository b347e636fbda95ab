//! Streaming sample statistics and the shared test-process contract.
//!
//! Every test process in this crate consumes observations one at a time and
//! reports a nonnegative (possibly infinite) value. Rejecting the null when
//! the value reaches `1/alpha` controls the type-1 error uniformly over time.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Observations kept for order-statistic methods.
#[derive(Debug, Clone, Default, PartialEq)]
struct Retained {
    arrival: Vec<f64>,
    sorted: Vec<f64>,
}

/// Sufficient statistics of a sample: n, S_n = Σ X_i, V_n = Σ X_i², the
/// number of positive observations, and Welford's centered sum of squares.
///
/// Raw observations are only retained when requested with
/// [`SampleStats::with_retention`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleStats {
    n: u64,
    sum: CompensatedSum,
    sum_sq: CompensatedSum,
    pos_count: u64,
    mean: f64,
    centered_ss: f64,
    retained: Option<Retained>,
}

impl SampleStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_retention() -> Self {
        Self {
            retained: Some(Retained::default()),
            ..Self::default()
        }
    }

    pub fn from_slice(xs: &[f64]) -> Result<Self> {
        let mut stats = Self::new();
        for &x in xs {
            stats.update(x)?;
        }
        Ok(stats)
    }

    pub fn update(&mut self, x: f64) -> Result<()> {
        if x.is_nan() {
            return Err(Error::domain("observation is NaN"));
        }
        if x.is_infinite() {
            return Err(Error::domain("observation is infinite"));
        }
        self.n += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
        if x > 0.0 {
            self.pos_count += 1;
        }
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.centered_ss += delta * (x - self.mean);
        if let Some(r) = self.retained.as_mut() {
            r.arrival.push(x);
            let at = r.sorted.partition_point(|&v| v <= x);
            r.sorted.insert(at, x);
        }
        Ok(())
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// S_n.
    pub fn sum(&self) -> f64 {
        self.sum.value()
    }

    /// V_n.
    pub fn sum_sq(&self) -> f64 {
        self.sum_sq.value()
    }

    pub fn pos_count(&self) -> u64 {
        self.pos_count
    }

    /// x̄_n; zero for an empty sample.
    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum() / self.n as f64
        }
    }

    /// V_n / n.
    pub fn mean_sq(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum_sq() / self.n as f64
        }
    }

    /// Σ (X_i - x̄_n)², equal to V_n - S_n²/n but free of its cancellation.
    pub fn centered_ss(&self) -> f64 {
        self.centered_ss.max(0.0)
    }

    /// s_n² = Σ (X_i - x̄_n)² / n, the variance without Bessel correction.
    pub fn var_pop(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.centered_ss() / self.n as f64
        }
    }

    /// n V_n - S_n², evaluated as n Σ (X_i - x̄_n)².
    pub fn n_v_minus_s_sq(&self) -> f64 {
        self.n as f64 * self.centered_ss()
    }

    pub fn is_retaining(&self) -> bool {
        self.retained.is_some()
    }

    /// Observations in arrival order, when retention is enabled.
    pub fn retained(&self) -> Option<&[f64]> {
        self.retained.as_ref().map(|r| r.arrival.as_slice())
    }

    /// Observations in ascending order, when retention is enabled.
    pub fn sorted(&self) -> Option<&[f64]> {
        self.retained.as_ref().map(|r| r.sorted.as_slice())
    }
}

/// The t-statistic T_{n-1} = √(n-1) (S_n - n μ0) / √(n V_n - S_n²).
pub fn t_statistic(stats: &SampleStats, mu0: f64) -> Result<f64> {
    if stats.n() < 2 {
        return Err(Error::domain("t-statistic needs at least two observations"));
    }
    let spread = stats.n_v_minus_s_sq();
    if !(spread > 0.0) {
        return Err(Error::degenerate("all observations are equal"));
    }
    let n = stats.n() as f64;
    Ok((n - 1.0).sqrt() * (stats.sum() - n * mu0) / spread.sqrt())
}

/// A confidence interval whose endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CsInterval {
    pub lower: f64,
    pub upper: f64,
}

impl CsInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::numerical(format!("invalid interval [{lower}, {upper}]")));
        }
        Ok(Self { lower, upper })
    }

    pub const fn whole_line() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    /// `[center - radius, center + radius]`; an infinite radius gives ℝ.
    pub fn centered(center: f64, radius: f64) -> Result<Self> {
        if radius.is_infinite() {
            return Ok(Self::whole_line());
        }
        if !(radius >= 0.0) {
            return Err(Error::numerical(format!("negative or NaN radius {radius}")));
        }
        Self::new(center - radius, center + radius)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn is_whole_line(&self) -> bool {
        self.lower == f64::NEG_INFINITY && self.upper == f64::INFINITY
    }
}

impl fmt::Display for CsInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lower, self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessKind {
    Martingale,
    EProcess,
    /// Extended nonnegative supermartingale; may take the value +∞.
    ExtendedNsm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Filtration {
    Canonical,
    ScaleInvariant,
}

/// A test process evaluated online.
///
/// Values are nonnegative; they are finite unless the kind is
/// [`ProcessKind::ExtendedNsm`]. Kind and filtration never change.
pub trait ProcessEvaluator: Send {
    fn observe(&mut self, x: f64) -> Result<()>;

    /// Natural log of the current value (`-inf` for zero, `+inf` for an
    /// infinite extended value).
    fn log_value(&self) -> Result<f64>;

    fn value(&self) -> Result<f64> {
        self.log_value().map(f64::exp)
    }

    fn kind(&self) -> ProcessKind;

    fn filtration(&self) -> Filtration;

    /// Number of observations consumed so far.
    fn n(&self) -> u64;
}

/// A sequence of confidence intervals evaluated online.
pub trait ConfidenceSequence: Send {
    fn observe(&mut self, x: f64) -> Result<()>;

    fn interval(&self) -> Result<CsInterval>;

    /// False for fixed-sample intervals that carry no time-uniform guarantee.
    fn anytime_valid(&self) -> bool {
        true
    }

    fn n(&self) -> u64;
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Rejection threshold 1/α for unit-initialized test processes.
pub fn ville_threshold(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(1.0 / alpha)
}

/// Anytime-valid p-value 1 ∧ (max_n M_n)⁻¹; one for an empty trajectory.
pub fn anytime_p_value(trajectory: &[f64]) -> Result<f64> {
    let mut running_max: f64 = 0.0;
    for &m in trajectory {
        if !(m >= 0.0) {
            return Err(Error::domain(format!("test-process value must be nonnegative, got {m}")));
        }
        running_max = running_max.max(m);
    }
    Ok(p_value_from_max(running_max))
}

pub(crate) fn p_value_from_max(running_max: f64) -> f64 {
    if running_max <= 1.0 {
        1.0
    } else {
        1.0 / running_max
    }
}

const ADJUSTER_CLAMP: f64 = 1e-9;

/// The adjuster f(x) = (y - 1 - ln y) / ln² y with y = max(x, 1 + 1e-9).
///
/// Turns the stopped value of a test process from a coarser filtration into
/// an e-value for the canonical one.
pub fn adjust_evalue(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!("adjust_evalue requires x >= 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let d = (x - 1.0).max(ADJUSTER_CLAMP);
    let l = d.ln_1p();
    let numerator = if d < 1e-3 {
        // d - ln(1 + d) = d²/2 - d³/3 + d⁴/4 - ...
        let mut term = d * d;
        let mut acc = 0.0;
        for k in 2..12 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * term / k as f64;
            term *= d;
        }
        acc
    } else {
        d - l
    };
    Ok(numerator / (l * l))
}

/// {μ0 : M(μ0) < 1/α} for a family that is quasi-convex in μ0, found by
/// outward expansion from `center` followed by bisection on each side.
///
/// `center` must lie inside the set; an unbounded side yields an infinite
/// endpoint.
pub fn invert_to_cs<F>(family: F, alpha: f64, center: f64, scale: f64) -> Result<CsInterval>
where
    F: Fn(f64) -> Result<f64>,
{
    check_alpha(alpha)?;
    if !(scale > 0.0) || !center.is_finite() {
        return Err(Error::domain("search center must be finite and scale positive"));
    }
    let threshold = 1.0 / alpha;
    let inside = |mu: f64| -> Result<bool> { Ok(family(mu)? < threshold) };
    if !inside(center)? {
        return Err(Error::numerical(format!(
            "search center {center} is not inside the confidence set"
        )));
    }
    let lower = boundary(&inside, center, -scale)?;
    let upper = boundary(&inside, center, scale)?;
    CsInterval::new(lower, upper)
}

const MAX_DOUBLINGS: usize = 64;
const MAX_BISECTIONS: usize = 300;

fn boundary<F>(inside: &F, center: f64, step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<bool>,
{
    let mut near = center;
    let mut far = center + step;
    let mut width = step;
    let mut doublings = 0;
    while inside(far)? {
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Ok(if step > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY });
        }
        near = far;
        width *= 2.0;
        far = center + width;
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (near + far);
        if mid == near || mid == far {
            break;
        }
        if (far - near).abs() <= 1e-13 * (near.abs().max(far.abs()) + step.abs()) {
            break;
        }
        if inside(mid)? {
            near = mid;
        } else {
            far = mid;
        }
    }
    Ok(0.5 * (near + far))
}
