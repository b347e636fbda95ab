use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use seqt::baselines::StitchParams;
use seqt::harness::{
    cmd_bounds, cmd_cs, cmd_eprocess, cmd_replay, cmd_simulate, parse_reals, CSq, DataSource, Method,
    ProcessSpec, SimConfig,
};
use seqt::universal::EstimatorScheme;
use seqt::{Error, Result};

/// Anytime-valid t-tests and confidence sequences.
#[derive(Debug, Parser)]
#[command(name = "seqt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write e-process trajectories as rep,n,log_value rows.
    Eprocess(RunArgs),
    /// Write confidence-sequence trajectories as rep,n,lower,upper rows.
    Cs(RunArgs),
    /// Run seeded replications; write one record per replication and a JSON summary.
    Simulate(RunArgs),
    /// Print the minimax width bound, the e-power ceiling and the optimal c².
    Bounds(BoundsArgs),
    /// Stream a data file through one or more methods.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct MethodArgs {
    /// Null mean.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu0: f64,
    /// Mixture precision c², or `optimal[:N]` for the width-optimal value at N (default n-max).
    #[arg(long, default_value = "1")]
    c_sq: String,
    /// Start time of Lai's confidence sequence.
    #[arg(long, default_value_t = 2)]
    lai_m: u64,
    /// Stitching ratio η.
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// Stitching exponent s.
    #[arg(long, default_value_t = 1.25)]
    stitch_s: f64,
    /// Plug-in estimator: `empirical`, `MU0,NU0,A0,B0` (normal-inverse-gamma) or `fixed:MU,SIGMA`.
    #[arg(long, default_value = "empirical", allow_hyphen_values = true)]
    prior: String,
    /// Observations used only to fit the plug-in estimator.
    #[arg(long, default_value_t = 0)]
    burn_in: u64,
    /// Beta-binomial mixture parameters for the median test.
    #[arg(long, default_value_t = 1.0)]
    median_a: f64,
    #[arg(long, default_value_t = 1.0)]
    median_b: f64,
    /// Tilt of the fixed sign-test supermartingale.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    lambda: f64,
    /// Standardized effect of the single likelihood ratio (si-lr).
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    theta: f64,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    method: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    method_args: MethodArgs,
    /// Trajectory length (default 1000, or the whole file).
    #[arg(long)]
    n_max: Option<u64>,
    #[arg(long, default_value_t = 1)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `normal:MU,SIGMA`, `uniform-shifted:MU,HALF_WIDTH` or `file:PATH`.
    #[arg(long, default_value = "normal:0,1", allow_hyphen_values = true)]
    dist: String,
    /// Data file, one observation per line; overrides --dist.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output CSV path (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary path (default: next to --out with a .json extension, else stderr).
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Run replications on the current thread only.
    #[arg(long)]
    serial: bool,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Sample size.
    #[arg(long)]
    n: u64,
    /// Standardized effect μ/σ.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    theta: f64,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// One or more methods, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    method: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    method_args: MethodArgs,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn parse_prior(s: &str) -> Result<EstimatorScheme> {
    if s == "empirical" {
        return Ok(EstimatorScheme::Empirical);
    }
    if let Some(rest) = s.strip_prefix("fixed:") {
        return match parse_reals(rest, "--prior")?.as_slice() {
            &[mu, sigma] => Ok(EstimatorScheme::Fixed { mu, sigma }),
            _ => Err(Error::Usage("--prior fixed:MU,SIGMA takes two numbers".into())),
        };
    }
    match parse_reals(s.strip_prefix("nig:").unwrap_or(s), "--prior")?.as_slice() {
        &[mu0, nu0, a0, b0] => Ok(EstimatorScheme::Nig { mu0, nu0, a0, b0 }),
        _ => Err(Error::Usage(
            "--prior expects `empirical`, `fixed:MU,SIGMA` or four numbers MU0,NU0,A0,B0".into(),
        )),
    }
}

fn parse_c_sq(s: &str, n_max: Option<u64>) -> Result<CSq> {
    if s == "optimal" {
        return Ok(CSq::OptimalAt(n_max.unwrap_or(1000)));
    }
    if let Some(n) = s.strip_prefix("optimal:") {
        return n
            .parse()
            .map(CSq::OptimalAt)
            .map_err(|_| Error::Usage(format!("--c-sq: '{n}' is not a sample size")));
    }
    s.parse()
        .map(CSq::Value)
        .map_err(|_| Error::Usage(format!("--c-sq: '{s}' is neither a number nor optimal[:N]")))
}

fn build_spec(method: &str, a: &MethodArgs, n_max: Option<u64>) -> Result<ProcessSpec> {
    let mut spec = ProcessSpec::new(method.parse::<Method>()?);
    spec.mu0 = a.mu0;
    spec.c_sq = parse_c_sq(&a.c_sq, n_max)?;
    spec.lai_m = a.lai_m;
    spec.stitch = StitchParams::new(a.eta, a.stitch_s)?;
    spec.prior = parse_prior(&a.prior)?;
    spec.burn_in = a.burn_in;
    spec.median_a = a.median_a;
    spec.median_b = a.median_b;
    spec.lambda = a.lambda;
    spec.theta = a.theta;
    Ok(spec)
}

fn build_config(a: &RunArgs) -> Result<SimConfig> {
    let source = match &a.input {
        Some(p) => DataSource::File(p.clone()),
        None => a.dist.parse()?,
    };
    let mut cfg = SimConfig::new(source, build_spec(&a.method, &a.method_args, a.n_max)?);
    cfg.n_max = a.n_max;
    cfg.reps = a.reps;
    cfg.seed = a.seed;
    cfg.alpha = a.alpha;
    cfg.parallel = !a.serial;
    Ok(cfg)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_summary<T: Serialize>(value: &T, summary: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(value).map_err(|e| Error::Usage(e.to_string()))?;
    let target = summary.map(Path::to_path_buf).or_else(|| out.map(|o| o.with_extension("json")));
    match target {
        Some(p) => std::fs::write(p, json + "\n")?,
        None => eprintln!("{json}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Eprocess(a) => {
            let cfg = build_config(&a)?;
            let mut out = open_out(a.out.as_deref())?;
            cmd_eprocess(&cfg, &mut out)?;
            out.flush()?;
        }
        Command::Cs(a) => {
            let cfg = build_config(&a)?;
            let mut out = open_out(a.out.as_deref())?;
            cmd_cs(&cfg, &mut out)?;
            out.flush()?;
        }
        Command::Simulate(a) => {
            let cfg = build_config(&a)?;
            let mut out = open_out(a.out.as_deref())?;
            let summary = cmd_simulate(&cfg, &mut out)?;
            out.flush()?;
            write_summary(&summary, a.summary.as_deref(), a.out.as_deref())?;
        }
        Command::Bounds(a) => {
            let report = cmd_bounds(a.alpha, a.n, a.theta)?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Usage(e.to_string()))?;
            println!("{json}");
        }
        Command::Replay(a) => {
            let specs = a
                .method
                .iter()
                .map(|m| build_spec(m, &a.method_args, None))
                .collect::<Result<Vec<_>>>()?;
            let mut out = open_out(a.out.as_deref())?;
            let reports = cmd_replay(&a.input, &specs, a.alpha, &mut out)?;
            out.flush()?;
            write_summary(&reports, a.summary.as_deref(), a.out.as_deref())?;
            for r in &reports {
                if let Some(e) = &r.error {
                    eprintln!("seqt: {}: {e}", r.method.name());
                }
            }
            return Ok(reports.iter().map(|r| r.exit_code).find(|&c| c != 0).unwrap_or(0));
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("seqt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
