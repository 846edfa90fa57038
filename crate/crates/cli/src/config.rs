use std::path::PathBuf;

use clap::{CommandFactory, Parser, ValueEnum};
use serde::Serialize;

use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "SKEWLAB_OUT_DIR";
pub const DEFAULT_ALPHA: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Exact law of S_k for each k in --n
    Pmf,
    /// Return-probability sequence g and its convolution powers up to max --n
    Convolution,
    /// Partial-sum growth against the Karamata prediction at each --n
    Tauberian,
    /// Fourth moments and term breakdown at every grid pair up to n*horizon
    Moments,
    /// Sup of the fourth-moment ratio over grid and sampled off-grid pairs
    TightnessScan,
    /// Endpoint histograms of both samplers with chi-square checks
    Simulate,
    /// Exact KS distance to the skew Brownian marginal at t = horizon
    Converge,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pmf => "pmf",
            Command::Convolution => "convolution",
            Command::Tauberian => "tauberian",
            Command::Moments => "moments",
            Command::TightnessScan => "tightness-scan",
            Command::Simulate => "simulate",
            Command::Converge => "converge",
        }
    }

    fn default_n(self) -> Vec<usize> {
        match self {
            Command::Pmf => vec![10],
            Command::Convolution => vec![1000],
            Command::Tauberian => vec![100, 1000, 10_000, 100_000],
            Command::Moments => vec![16],
            Command::TightnessScan => (6..=12).map(|e| 1 << e).collect(),
            Command::Simulate => vec![10, 20],
            Command::Converge => vec![100, 1000, 10_000],
        }
    }

    fn default_replicates(self) -> usize {
        match self {
            Command::TightnessScan => 1000,
            Command::Simulate => 100_000,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("malformed number '{s}'"))?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(format!("alpha must lie in (0,1), got {s}"))
    }
}

fn parse_count(s: &str) -> Result<usize, String> {
    let n: usize = s
        .trim()
        .parse()
        .map_err(|_| format!("malformed integer '{s}'"))?;
    if n >= 1 {
        Ok(n)
    } else {
        Err("must be at least 1".into())
    }
}

fn parse_horizon(s: &str) -> Result<f64, String> {
    let h: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("malformed number '{s}'"))?;
    if h > 0.0 && h.is_finite() {
        Ok(h)
    } else {
        Err(format!("horizon must be positive, got {s}"))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "skewlab",
    version,
    about = "Batch experiments on the alpha-skew random walk",
    arg_required_else_help = true
)]
struct Args {
    #[arg(value_enum)]
    command: Command,

    /// Skew parameter(s) in (0,1), comma separated [default: 0.7]
    #[arg(long, value_delimiter = ',', value_parser = parse_alpha)]
    alpha: Vec<f64>,

    /// Scale(s) or step count(s), comma separated; default depends on the command
    #[arg(long, value_delimiter = ',', value_parser = parse_count)]
    n: Vec<usize>,

    /// Time horizon
    #[arg(long, default_value = "1", value_parser = parse_horizon)]
    horizon: f64,

    /// Replicates (simulate) or off-grid sample count (tightness-scan)
    #[arg(long, value_parser = parse_count)]
    replicates: Option<usize>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output directory
    #[arg(long, env = OUT_DIR_ENV, default_value = "skewlab-out")]
    output: PathBuf,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

/// A fully resolved experiment: every default has been filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub alpha: Vec<f64>,
    pub n: Vec<usize>,
    pub horizon: f64,
    pub replicates: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub format: Format,
}

impl ExperimentConfig {
    /// Canonical argument list that parses back to this config.
    pub fn to_argv(&self) -> Vec<String> {
        let join = |xs: Vec<String>| xs.join(",");
        vec![
            self.command.name().to_string(),
            "--alpha".into(),
            join(self.alpha.iter().map(|a| a.to_string()).collect()),
            "--n".into(),
            join(self.n.iter().map(|n| n.to_string()).collect()),
            "--horizon".into(),
            self.horizon.to_string(),
            "--replicates".into(),
            self.replicates.to_string(),
            "--seed".into(),
            self.seed.to_string(),
            "--output".into(),
            self.output.to_string_lossy().into_owned(),
            "--format".into(),
            self.format.name().into(),
        ]
    }
}

pub fn usage() -> String {
    Args::command().render_help().to_string()
}

/// Parses arguments that follow the program name.
pub fn parse_config<S: AsRef<str>>(argv: &[S]) -> Result<ExperimentConfig, CliError> {
    if argv.is_empty() {
        return Err(CliError::Empty);
    }
    let tokens = std::iter::once("skewlab").chain(argv.iter().map(|s| s.as_ref()));
    let args = Args::try_parse_from(tokens).map_err(CliError::Clap)?;
    let alpha = if args.alpha.is_empty() {
        vec![DEFAULT_ALPHA]
    } else {
        args.alpha
    };
    let n = if args.n.is_empty() {
        args.command.default_n()
    } else {
        args.n
    };
    Ok(ExperimentConfig {
        command: args.command,
        alpha,
        n,
        horizon: args.horizon,
        replicates: args.replicates.unwrap_or(args.command.default_replicates()),
        seed: args.seed,
        output: args.output,
        format: args.format,
    })
}
