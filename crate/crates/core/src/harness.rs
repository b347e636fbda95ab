//! Library side of the command-line tool: method selection, data sources,
//! seeded replications and the CSV/JSON writers.
//!
//! Every replication draws from its own ChaCha substream and owns its
//! evaluator, so running replications on a thread pool changes nothing in
//! the output.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{
    ClassicalTCi, MedianCs, MedianProcess, MedianStatistic, PluginTCs, StitchParams,
};
use crate::error::{Error, Result};
use crate::optimality::{epower_ceiling, minimax_lower_bound, EffectSize};
use crate::sampling::{substream, Distribution};
use crate::scale_invariant::{optimal_c_sq, GaussMixCs, LaiCs, SiProcess, SiStatistic};
use crate::stats::{check_alpha, ConfidenceSequence, ProcessEvaluator};
use crate::universal::{EstimatorScheme, PluginEstimator, UiCs, UiProcess, UiProcessState, UiStatistic};

/// Methods reachable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    GaussMix,
    SemiOneSided,
    Lai,
    Jzs,
    SiLr,
    Ui,
    UiOneSided,
    Median,
    MedianSign,
    Plugin,
    Classical,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::GaussMix,
        Method::SemiOneSided,
        Method::Lai,
        Method::Jzs,
        Method::SiLr,
        Method::Ui,
        Method::UiOneSided,
        Method::Median,
        Method::MedianSign,
        Method::Plugin,
        Method::Classical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::GaussMix => "gauss-mix",
            Method::SemiOneSided => "semi-one-sided",
            Method::Lai => "lai",
            Method::Jzs => "jzs",
            Method::SiLr => "si-lr",
            Method::Ui => "ui",
            Method::UiOneSided => "ui-one-sided",
            Method::Median => "median",
            Method::MedianSign => "median-sign",
            Method::Plugin => "plugin",
            Method::Classical => "classical",
        }
    }

    pub fn has_process(self) -> bool {
        !matches!(self, Method::Plugin | Method::Classical)
    }

    pub fn has_cs(self) -> bool {
        matches!(
            self,
            Method::GaussMix | Method::Lai | Method::Ui | Method::Median | Method::Plugin | Method::Classical
        )
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let m = match s {
            "lai-ensm" | "lai-cs" => Method::Lai,
            "ui-t" => Method::Ui,
            "median-betabinom" => Method::Median,
            other => *Method::ALL
                .iter()
                .find(|m| m.name() == other)
                .ok_or_else(|| {
                    let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                    Error::Usage(format!("unknown method '{other}' (expected one of {})", names.join(", ")))
                })?,
        };
        Ok(m)
    }
}

/// Mixture precision: a fixed value or the closed-form optimum for a target n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CSq {
    Value(f64),
    OptimalAt(u64),
}

impl CSq {
    pub fn resolve(self, alpha: f64) -> Result<f64> {
        match self {
            CSq::Value(c) => Ok(c),
            CSq::OptimalAt(n) => optimal_c_sq(n, alpha),
        }
    }
}

/// A method together with every hyperparameter any method may need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProcessSpec {
    pub method: Method,
    pub mu0: f64,
    pub c_sq: CSq,
    pub lai_m: u64,
    pub stitch: StitchParams,
    pub prior: EstimatorScheme,
    pub burn_in: u64,
    pub median_a: f64,
    pub median_b: f64,
    pub lambda: f64,
    pub theta: f64,
}

impl ProcessSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            mu0: 0.0,
            c_sq: CSq::Value(1.0),
            lai_m: 2,
            stitch: StitchParams::default(),
            prior: EstimatorScheme::Empirical,
            burn_in: 0,
            median_a: 1.0,
            median_b: 1.0,
            lambda: 0.5,
            theta: 1.0,
        }
    }

    fn ui_state(&self, mu0: f64) -> Result<UiProcessState> {
        UiProcessState::new(PluginEstimator::new(self.prior)?, mu0, self.burn_in)
    }

    /// A fresh evaluator for the null μ = mu0 (μ ≤ mu0 for one-sided methods).
    pub fn process(&self, alpha: f64) -> Result<Box<dyn ProcessEvaluator>> {
        let si = |stat| -> Result<Box<dyn ProcessEvaluator>> { Ok(Box::new(SiProcess::new(stat, self.mu0)?)) };
        match self.method {
            Method::GaussMix => si(SiStatistic::GaussMix { c_sq: self.c_sq.resolve(alpha)? }),
            Method::SemiOneSided => si(SiStatistic::SemiOneSided { c_sq: self.c_sq.resolve(alpha)? }),
            Method::Lai => si(SiStatistic::Lai),
            Method::Jzs => si(SiStatistic::Jzs),
            Method::SiLr => si(SiStatistic::LikelihoodRatio { theta: self.theta }),
            Method::Ui => Ok(Box::new(UiProcess::new(self.ui_state(self.mu0)?, UiStatistic::TTwoSided)?)),
            Method::UiOneSided => Ok(Box::new(UiProcess::new(self.ui_state(self.mu0)?, UiStatistic::TOneSided)?)),
            Method::Median => Ok(Box::new(MedianProcess::new(
                MedianStatistic::BetaBinomial { a: self.median_a, b: self.median_b },
                self.mu0,
            )?)),
            Method::MedianSign => Ok(Box::new(MedianProcess::new(
                MedianStatistic::Sign { lambda: self.lambda },
                self.mu0,
            )?)),
            Method::Plugin | Method::Classical => Err(Error::Usage(format!(
                "method '{}' has no e-process; it only provides intervals",
                self.method.name()
            ))),
        }
    }

    /// A fresh confidence sequence at level 1 - alpha.
    pub fn cs(&self, alpha: f64) -> Result<Box<dyn ConfidenceSequence>> {
        match self.method {
            Method::GaussMix => Ok(Box::new(GaussMixCs::new(self.c_sq.resolve(alpha)?, alpha)?)),
            Method::Lai => Ok(Box::new(LaiCs::new(self.lai_m, alpha)?)),
            Method::Ui => Ok(Box::new(UiCs::new(self.ui_state(0.0)?, alpha)?)),
            Method::Median => Ok(Box::new(MedianCs::new(alpha)?)),
            Method::Plugin => Ok(Box::new(PluginTCs::new(alpha, self.stitch)?)),
            Method::Classical => Ok(Box::new(ClassicalTCi::new(alpha)?)),
            m => Err(Error::Usage(format!(
                "method '{}' has no confidence sequence",
                m.name()
            ))),
        }
    }
}

/// Where observations come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(Distribution),
    File(PathBuf),
}

impl FromStr for DataSource {
    type Err = Error;

    /// `normal:MU,SIGMA`, `uniform-shifted:MU,HALF_WIDTH` or `file:PATH`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        if kind == "file" {
            if rest.is_empty() {
                return Err(Error::Usage("file source needs a path, as in file:data.csv".into()));
            }
            return Ok(DataSource::File(PathBuf::from(rest)));
        }
        let params = parse_reals(rest, "--dist")?;
        let dist = match (kind, params.as_slice()) {
            ("normal", []) => Distribution::Normal { mu: 0.0, sigma: 1.0 },
            ("normal", &[mu, sigma]) => Distribution::Normal { mu, sigma },
            ("uniform-shifted" | "uniform_shifted" | "uniform", &[mu, half_width]) => {
                Distribution::UniformShifted { mu, half_width }
            }
            _ => {
                return Err(Error::Usage(format!(
                    "cannot parse distribution '{s}' (expected normal:MU,SIGMA, uniform-shifted:MU,HALF_WIDTH or file:PATH)"
                )))
            }
        };
        dist.validate()?;
        Ok(DataSource::Synthetic(dist))
    }
}

/// Comma-separated reals; an empty string gives an empty list.
pub fn parse_reals(s: &str, what: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Usage(format!("{what}: '{t}' is not a number")))
        })
        .collect()
}

/// One observation per line; blank lines and `#` comments are skipped.
pub fn parse_observations(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let x: f64 = t.parse().map_err(|_| Error::Data {
            line: Some(i + 1),
            message: format!("'{t}' is not a number"),
        })?;
        if !x.is_finite() {
            return Err(Error::Data {
                line: Some(i + 1),
                message: format!("observation must be finite, got '{t}'"),
            });
        }
        out.push(x);
    }
    Ok(out)
}

pub fn read_observations(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Data {
        line: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_observations(&text)
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub source: DataSource,
    /// Trajectory length; `None` means all rows of a file source.
    pub n_max: Option<u64>,
    pub reps: u64,
    pub seed: u64,
    pub alpha: f64,
    pub spec: ProcessSpec,
    pub parallel: bool,
}

impl SimConfig {
    pub fn new(source: DataSource, spec: ProcessSpec) -> Self {
        Self {
            source,
            n_max: None,
            reps: 1,
            seed: 0,
            alpha: 0.05,
            spec,
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.reps == 0 {
            return Err(Error::Usage("reps must be at least 1".into()));
        }
        if self.n_max == Some(0) {
            return Err(Error::Usage("n-max must be at least 1".into()));
        }
        if let DataSource::File(_) = self.source {
            if self.reps != 1 {
                return Err(Error::Usage("a file source supports a single replication only".into()));
            }
        }
        if !self.spec.mu0.is_finite() {
            return Err(Error::domain("mu0 must be finite"));
        }
        Ok(())
    }

    /// Loads file data once; synthetic data is drawn per replication.
    fn prepare(&self) -> Result<Prepared> {
        self.validate()?;
        match &self.source {
            DataSource::Synthetic(d) => Ok(Prepared::Synthetic(*d, self.n_max.unwrap_or(1000))),
            DataSource::File(path) => {
                let mut xs = read_observations(path)?;
                if let Some(n) = self.n_max {
                    xs.truncate(n as usize);
                }
                if xs.is_empty() {
                    return Err(Error::Data {
                        line: None,
                        message: format!("{} contains no observations", path.display()),
                    });
                }
                Ok(Prepared::File(xs))
            }
        }
    }

    fn run_reps<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        if self.parallel {
            (0..self.reps).into_par_iter().map(f).collect()
        } else {
            (0..self.reps).map(f).collect()
        }
    }
}

enum Prepared {
    Synthetic(Distribution, u64),
    File(Vec<f64>),
}

impl Prepared {
    fn data(&self, seed: u64, rep: u64) -> Vec<f64> {
        match self {
            Prepared::Synthetic(d, n) => {
                let mut rng = substream(seed, rep);
                (0..*n).map(|_| d.sample(&mut rng)).collect()
            }
            Prepared::File(xs) => xs.clone(),
        }
    }

    fn true_mean(&self) -> Option<f64> {
        match self {
            Prepared::Synthetic(d, _) => Some(d.mean()),
            Prepared::File(_) => None,
        }
    }
}

/// CSV rendering of a real with `inf`, `-inf` and `nan` literals.
pub fn fmt_real(x: f64) -> String {
    let a = x.abs();
    if x.is_nan() {
        "nan".to_string()
    } else if a.is_finite() && a != 0.0 && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn first_error<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

/// Writes `rep,n,log_value` rows.
pub fn cmd_eprocess(cfg: &SimConfig, out: &mut dyn Write) -> Result<()> {
    let prep = cfg.prepare()?;
    cfg.spec.process(cfg.alpha)?;
    let chunks = first_error(cfg.run_reps(|rep| -> Result<String> {
        let mut proc = cfg.spec.process(cfg.alpha)?;
        let mut s = String::new();
        for x in prep.data(cfg.seed, rep) {
            proc.observe(x)?;
            let _ = writeln!(s, "{rep},{},{}", proc.n(), fmt_real(proc.log_value()?));
        }
        Ok(s)
    }))?;
    writeln!(out, "rep,n,log_value")?;
    for c in chunks {
        out.write_all(c.as_bytes())?;
    }
    Ok(())
}

/// Writes `rep,n,lower,upper` rows, preceded by `# fixed_n_only=true` for
/// intervals without a time-uniform guarantee.
pub fn cmd_cs(cfg: &SimConfig, out: &mut dyn Write) -> Result<()> {
    let prep = cfg.prepare()?;
    let probe = cfg.spec.cs(cfg.alpha)?;
    let chunks = first_error(cfg.run_reps(|rep| -> Result<String> {
        let mut cs = cfg.spec.cs(cfg.alpha)?;
        let mut s = String::new();
        for x in prep.data(cfg.seed, rep) {
            cs.observe(x)?;
            let iv = cs.interval()?;
            let _ = writeln!(s, "{rep},{},{},{}", cs.n(), fmt_real(iv.lower), fmt_real(iv.upper));
        }
        Ok(s)
    }))?;
    if !probe.anytime_valid() {
        writeln!(out, "# fixed_n_only=true")?;
    }
    writeln!(out, "rep,n,lower,upper")?;
    for c in chunks {
        out.write_all(c.as_bytes())?;
    }
    Ok(())
}

/// Outcome of one simulated replication. Fields a method cannot supply are
/// `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepRecord {
    pub rep: u64,
    pub crossed: Option<bool>,
    pub first_crossing: Option<u64>,
    pub max_log_value: Option<f64>,
    pub p_value: Option<f64>,
    pub miscovered: Option<bool>,
    pub final_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub method: Method,
    pub reps: u64,
    pub n_max: u64,
    pub alpha: f64,
    pub seed: u64,
    pub anytime_valid: Option<bool>,
    pub crossing_rate: Option<f64>,
    pub crossing_rate_se: Option<f64>,
    pub mean_first_crossing: Option<f64>,
    pub miscoverage_rate: Option<f64>,
    pub miscoverage_rate_se: Option<f64>,
    pub mean_width: Option<f64>,
    pub mean_width_se: Option<f64>,
    pub mean_p_value: Option<f64>,
}

fn mean_se(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let se = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Some((mean, se))
}

fn simulate_rep(cfg: &SimConfig, prep: &Prepared, rep: u64, log_threshold: f64) -> Result<RepRecord> {
    let data = prep.data(cfg.seed, rep);
    let mut rec = RepRecord {
        rep,
        crossed: None,
        first_crossing: None,
        max_log_value: None,
        p_value: None,
        miscovered: None,
        final_width: None,
    };
    if cfg.spec.method.has_process() {
        let mut proc = cfg.spec.process(cfg.alpha)?;
        let mut max_log = 0.0f64;
        for &x in &data {
            proc.observe(x)?;
            let lv = proc.log_value()?;
            max_log = max_log.max(lv);
            if rec.first_crossing.is_none() && lv >= log_threshold {
                rec.first_crossing = Some(proc.n());
            }
        }
        rec.crossed = Some(rec.first_crossing.is_some());
        rec.max_log_value = Some(max_log);
        rec.p_value = Some((-max_log).exp());
    }
    if cfg.spec.method.has_cs() {
        let mut cs = cfg.spec.cs(cfg.alpha)?;
        let mut missed = false;
        let mut width = f64::INFINITY;
        for &x in &data {
            cs.observe(x)?;
            let iv = cs.interval()?;
            if let Some(mu) = prep.true_mean() {
                missed |= !iv.contains(mu);
            }
            width = iv.width();
        }
        rec.miscovered = prep.true_mean().map(|_| missed);
        rec.final_width = Some(width);
    }
    Ok(rec)
}

fn fmt_opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

/// Runs the replications, writes one CSV record per replication to `out`
/// and returns the aggregate summary.
pub fn cmd_simulate(cfg: &SimConfig, out: &mut dyn Write) -> Result<SimSummary> {
    let prep = cfg.prepare()?;
    let log_threshold = -cfg.alpha.ln();
    let anytime_valid = if cfg.spec.method.has_cs() {
        Some(cfg.spec.cs(cfg.alpha)?.anytime_valid())
    } else {
        cfg.spec.process(cfg.alpha)?;
        None
    };
    let records = first_error(cfg.run_reps(|rep| simulate_rep(cfg, &prep, rep, log_threshold)))?;

    writeln!(out, "rep,crossed,first_crossing,max_log_value,p_value,miscovered,final_width")?;
    for r in &records {
        let b = |v: bool| u8::from(v).to_string();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.rep,
            fmt_opt(r.crossed, b),
            match (r.crossed, r.first_crossing) {
                (Some(_), None) => "inf".to_string(),
                (_, t) => fmt_opt(t, |t| t.to_string()),
            },
            fmt_opt(r.max_log_value, fmt_real),
            fmt_opt(r.p_value, fmt_real),
            fmt_opt(r.miscovered, b),
            fmt_opt(r.final_width, fmt_real),
        )?;
    }

    let collect = |f: &dyn Fn(&RepRecord) -> Option<f64>| records.iter().filter_map(f).collect::<Vec<_>>();
    let crossing = mean_se(&collect(&|r| r.crossed.map(|c| f64::from(u8::from(c)))));
    let miscoverage = mean_se(&collect(&|r| r.miscovered.map(|c| f64::from(u8::from(c)))));
    let width = mean_se(&collect(&|r| r.final_width));
    let first = mean_se(&collect(&|r| r.first_crossing.map(|t| t as f64)));
    let p = mean_se(&collect(&|r| r.p_value));
    let n_max = match &prep {
        Prepared::Synthetic(_, n) => *n,
        Prepared::File(xs) => xs.len() as u64,
    };
    Ok(SimSummary {
        method: cfg.spec.method,
        reps: cfg.reps,
        n_max,
        alpha: cfg.alpha,
        seed: cfg.seed,
        anytime_valid,
        crossing_rate: crossing.map(|c| c.0),
        crossing_rate_se: crossing.map(|c| c.1),
        mean_first_crossing: first.map(|c| c.0),
        miscoverage_rate: miscoverage.map(|c| c.0),
        miscoverage_rate_se: miscoverage.map(|c| c.1),
        mean_width: width.map(|c| c.0).filter(|w| w.is_finite()),
        mean_width_se: width.map(|c| c.1).filter(|w| w.is_finite()),
        mean_p_value: p.map(|c| c.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub alpha: f64,
    pub n: u64,
    pub theta: f64,
    pub minimax_lower_bound: f64,
    pub epower_ceiling: f64,
    pub epower_ceiling_one_sided: f64,
    pub optimal_c_sq: f64,
}

pub fn cmd_bounds(alpha: f64, n: u64, theta: f64) -> Result<BoundsReport> {
    let effect = EffectSize::standardized(theta)?;
    Ok(BoundsReport {
        alpha,
        n,
        theta,
        minimax_lower_bound: minimax_lower_bound(alpha, n)?,
        epower_ceiling: epower_ceiling(&effect, false),
        epower_ceiling_one_sided: epower_ceiling(&effect, true),
        optimal_c_sq: optimal_c_sq(n, alpha)?,
    })
}

/// Per-method outcome of a replay. A method that fails part-way keeps the
/// trajectory computed so far and records the error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub method: Method,
    pub n: u64,
    pub max_e_value: f64,
    pub p_value: f64,
    pub first_crossing: Option<u64>,
    pub error: Option<String>,
    #[serde(skip)]
    pub log_trajectory: Vec<f64>,
    #[serde(skip)]
    pub exit_code: i32,
}

/// Streams one data set through several methods.
pub fn replay(data: &[f64], specs: &[ProcessSpec], alpha: f64) -> Result<Vec<ReplayReport>> {
    check_alpha(alpha)?;
    let log_threshold = -alpha.ln();
    specs
        .iter()
        .map(|spec| {
            let mut proc = spec.process(alpha)?;
            let mut traj = Vec::with_capacity(data.len());
            let mut error = None;
            let mut exit_code = 0;
            for &x in data {
                match proc.observe(x).and_then(|_| proc.log_value()) {
                    Ok(lv) => traj.push(lv),
                    Err(e) => {
                        exit_code = e.exit_code();
                        error = Some(e.to_string());
                        break;
                    }
                }
            }
            let max_log = traj.iter().copied().fold(0.0f64, f64::max);
            Ok(ReplayReport {
                method: spec.method,
                n: traj.len() as u64,
                max_e_value: max_log.exp(),
                p_value: (-max_log).exp(),
                first_crossing: traj.iter().position(|&l| l >= log_threshold).map(|i| i as u64 + 1),
                error,
                log_trajectory: traj,
                exit_code,
            })
        })
        .collect()
}

/// Replays a file: writes `method,n,log_value` rows and returns the reports.
pub fn cmd_replay(
    path: &Path,
    specs: &[ProcessSpec],
    alpha: f64,
    out: &mut dyn Write,
) -> Result<Vec<ReplayReport>> {
    let data = read_observations(path)?;
    let reports = replay(&data, specs, alpha)?;
    writeln!(out, "method,n,log_value")?;
    for r in &reports {
        for (i, lv) in r.log_trajectory.iter().enumerate() {
            writeln!(out, "{},{},{}", r.method.name(), i + 1, fmt_real(*lv))?;
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale_invariant::gauss_mix_cs;
    use crate::stats::{anytime_p_value, SampleStats};

    fn synthetic(method: Method, dist: &str, n: u64, reps: u64, seed: u64) -> SimConfig {
        let mut cfg = SimConfig::new(dist.parse().unwrap(), ProcessSpec::new(method));
        cfg.n_max = Some(n);
        cfg.reps = reps;
        cfg.seed = seed;
        cfg
    }

    fn file_config(method: Method, contents: &str) -> (tempfile::NamedTempFile, SimConfig) {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        let cfg = SimConfig::new(DataSource::File(f.path().to_path_buf()), ProcessSpec::new(method));
        (f, cfg)
    }

    fn render(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn real_formatting() {
        assert_eq!(fmt_real(f64::INFINITY), "inf");
        assert_eq!(fmt_real(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_real(f64::NAN), "nan");
        assert_eq!(fmt_real(0.0), "0");
        assert_eq!(fmt_real(-2.5), "-2.5");
        assert_eq!(fmt_real(1.25e-9), "1.25e-9");
        for x in [1.0 / 3.0, 7.1e-300, -4.2e20, 123456.789] {
            assert_eq!(fmt_real(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("lai-ensm".parse::<Method>().unwrap(), Method::Lai);
        assert!(matches!("nope".parse::<Method>(), Err(Error::Usage(_))));
    }

    #[test]
    fn data_source_parsing() {
        assert_eq!(
            "normal:1,2".parse::<DataSource>().unwrap(),
            DataSource::Synthetic(Distribution::Normal { mu: 1.0, sigma: 2.0 })
        );
        assert_eq!(
            "uniform-shifted:0.5,1".parse::<DataSource>().unwrap(),
            DataSource::Synthetic(Distribution::UniformShifted { mu: 0.5, half_width: 1.0 })
        );
        assert_eq!("file:a.csv".parse::<DataSource>().unwrap(), DataSource::File("a.csv".into()));
        assert!("normal:1".parse::<DataSource>().is_err());
        assert!("normal:0,-1".parse::<DataSource>().is_err());
    }

    #[test]
    fn observation_parsing_reports_lines() {
        assert_eq!(parse_observations("# header\n1.5\n\n-2\n").unwrap(), vec![1.5, -2.0]);
        match parse_observations("1\n2\nabc\n") {
            Err(Error::Data { line: Some(3), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_observations("1\ninf\n"), Err(Error::Data { line: Some(2), .. })));
    }

    #[test]
    fn gauss_mix_single_row() {
        let (_f, cfg) = file_config(Method::GaussMix, "1.0\n");
        let s = render(|b| cmd_eprocess(&cfg, b));
        assert_eq!(s, "rep,n,log_value\n0,1,0\n");
    }

    #[test]
    fn lai_first_value_is_infinite() {
        let (_f, cfg) = file_config(Method::Lai, "0.3\n-1.2\n");
        let s = render(|b| cmd_eprocess(&cfg, b));
        assert!(s.lines().nth(1).unwrap().ends_with(",inf"));
        assert!(!s.lines().nth(2).unwrap().ends_with(",inf"));
    }

    #[test]
    fn median_cs_starts_unbounded() {
        let cfg = synthetic(Method::Median, "normal:0,1", 5, 1, 3);
        let s = render(|b| cmd_cs(&cfg, b));
        assert!(s.lines().nth(1).unwrap().ends_with(",-inf,inf"));
    }

    #[test]
    fn classical_carries_fixed_n_flag() {
        let cfg = synthetic(Method::Classical, "normal:0,1", 5, 2, 3);
        let s = render(|b| cmd_cs(&cfg, b));
        assert!(s.starts_with("# fixed_n_only=true\nrep,n,lower,upper\n"));
        let cfg = synthetic(Method::Ui, "normal:0,1", 5, 2, 3);
        assert!(render(|b| cmd_cs(&cfg, b)).starts_with("rep,n,lower,upper\n"));
    }

    #[test]
    fn optimal_c_sq_is_wired_through() {
        let mut cfg = synthetic(Method::GaussMix, "normal:0,1", 50, 1, 9);
        cfg.spec.c_sq = CSq::OptimalAt(500);
        let s = render(|b| cmd_cs(&cfg, b));
        let last: Vec<f64> = s.lines().last().unwrap().split(',').map(|t| t.parse().unwrap()).collect();

        let mut stats = SampleStats::new();
        for x in Prepared::Synthetic(Distribution::Normal { mu: 0.0, sigma: 1.0 }, 50).data(9, 0) {
            stats.update(x).unwrap();
        }
        let iv = gauss_mix_cs(&stats, optimal_c_sq(500, 0.05).unwrap(), 0.05).unwrap();
        assert_eq!((last[2], last[3]), (iv.lower, iv.upper));
    }

    #[test]
    fn outputs_are_deterministic_and_thread_independent() {
        for method in [Method::Ui, Method::GaussMix, Method::Median] {
            let mut cfg = synthetic(method, "normal:0.2,1", 60, 12, 42);
            let a = render(|b| cmd_simulate(&cfg, b).map(|_| ()));
            let b = render(|b| cmd_simulate(&cfg, b).map(|_| ()));
            let e = render(|b| cmd_eprocess(&cfg, b));
            cfg.parallel = false;
            let c = render(|b| cmd_simulate(&cfg, b).map(|_| ()));
            assert_eq!(a, b);
            assert_eq!(a, c);
            assert_eq!(e, render(|b| cmd_eprocess(&cfg, b)));
        }
    }

    #[test]
    fn single_rep_record_is_stable() {
        let cfg = synthetic(Method::GaussMix, "normal:1,1", 200, 1, 5);
        let mut buf = Vec::new();
        let s1 = cmd_simulate(&cfg, &mut buf).unwrap();
        let s2 = cmd_simulate(&cfg, &mut Vec::new()).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
        assert_eq!(s1.crossing_rate, Some(1.0));
    }

    #[test]
    fn median_crosses_under_alternative() {
        let cfg = synthetic(Method::Median, "normal:1,1", 500, 400, 17);
        let s = cmd_simulate(&cfg, &mut Vec::new()).unwrap();
        assert!(s.crossing_rate.unwrap() > 0.99);
        assert!(s.mean_first_crossing.unwrap() < 30.0);
    }

    #[test]
    fn null_crossing_respects_ville() {
        let cfg = synthetic(Method::GaussMix, "normal:0,1", 200, 2000, 8);
        let s = cmd_simulate(&cfg, &mut Vec::new()).unwrap();
        assert!(s.crossing_rate.unwrap() <= 0.05 + 3.0 * s.crossing_rate_se.unwrap().max(0.005));
    }

    #[test]
    fn emitted_values_are_well_formed() {
        for method in Method::ALL {
            let cfg = synthetic(method, "normal:0.3,2", 40, 3, 1);
            if method.has_process() {
                let s = render(|b| cmd_eprocess(&cfg, b));
                for line in s.lines().skip(1) {
                    let lv: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
                    assert!(!lv.is_nan(), "{method:?}: {line}");
                }
            } else {
                assert!(matches!(cfg.spec.process(0.05), Err(Error::Usage(_))));
            }
            if method.has_cs() {
                let s = render(|b| cmd_cs(&cfg, b));
                for line in s.lines().filter(|l| !l.starts_with('#')).skip(1) {
                    let v: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
                    assert!(v[2] <= v[3], "{method:?}: {line}");
                }
            }
        }
    }

    #[test]
    fn replay_matches_eprocess_and_isolates_failures() {
        let (f, cfg) = file_config(Method::GaussMix, "0.4\n1.3\n-0.2\n2.2\n1.9\n");
        let traj = render(|b| cmd_eprocess(&cfg, b));
        let logs: Vec<f64> = traj.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();

        let specs = [ProcessSpec::new(Method::GaussMix), ProcessSpec::new(Method::Ui)];
        let reports = cmd_replay(f.path(), &specs, 0.05, &mut Vec::new()).unwrap();
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0].log_trajectory, logs);
        let values: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
        assert!((reports[0].p_value - anytime_p_value(&values).unwrap()).abs() < 1e-15);

        let reports = replay(&[0.0, 0.0, 0.0], &specs, 0.05).unwrap();
        assert!(reports[0].error.as_deref().unwrap().contains("degenerate"));
        assert_eq!(reports[0].exit_code, 2);
        assert!(reports[1].error.is_none());
        assert_eq!(reports[1].n, 3);
    }

    #[test]
    fn bounds_report() {
        let r = cmd_bounds(0.05, 10, 1.0).unwrap();
        assert!((r.minimax_lower_bound - 0.54060).abs() < 1e-5);
        assert!((r.epower_ceiling - 0.5 * std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(r.optimal_c_sq, optimal_c_sq(10, 0.05).unwrap());
        let e = cmd_bounds(0.4, 10, 1.0).unwrap_err();
        assert!(e.to_string().contains("alpha < 1/3"));
    }

    #[test]
    fn config_validation() {
        let mut cfg = synthetic(Method::Ui, "normal:0,1", 10, 1, 0);
        cfg.alpha = 1.0;
        assert!(cmd_simulate(&cfg, &mut Vec::new()).is_err());
        let (_f, mut cfg) = file_config(Method::Ui, "1\n2\n");
        cfg.reps = 2;
        assert!(matches!(cmd_eprocess(&cfg, &mut Vec::new()), Err(Error::Usage(_))));
        let cfg = synthetic(Method::Jzs, "normal:0,1", 10, 1, 0);
        assert!(matches!(cmd_cs(&cfg, &mut Vec::new()), Err(Error::Usage(_))));
    }
}
