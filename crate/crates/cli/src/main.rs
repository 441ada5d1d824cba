//! `subexp`: diagnostics, second-order predictions, Lévy measure inversion and
//! convolution tails from the command line.
//!
//! Exit codes: 0 success, 1 a diagnostic failed, 2 invalid configuration or
//! violated precondition, 3 numerical failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] subexp::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid configuration: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if !e.is_precondition() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "subexp", version, about = "Second-order tail asymptotics of heavy-tailed and infinitely divisible laws")]
struct Cli {
    /// JSON object with option values; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a class-membership diagnostic and render a verdict.
    Diagnose(DiagnoseArgs),
    /// Tabulate a second-order prediction on an x grid.
    Predict(PredictArgs),
    /// Recover a jump law from a compound Poisson law and compare Laplace transforms.
    Invert(InvertArgs),
    /// Run every diagnostic of a named example law.
    Validate(ValidateArgs),
    /// Tails of convolution powers or of a two-law convolution.
    Convolve(ConvolveArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseArgs {
    /// Closed-form law: `pareto:alpha=3`, `weibull:beta=0.5`, `lognormal`, `exp:rate=1`.
    #[arg(long)]
    pub law: Option<String>,
    /// Jump law of a compound Poisson law, e.g. `powerlaw:alpha=2`; used instead of --law.
    #[arg(long)]
    pub jump: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Table range of the compound Poisson law (defaults to the largest x).
    #[arg(long)]
    pub x_max: Option<f64>,
    /// lloc, sloc, s2loc, s2loc-hypotheses, sd, s2d, power-ratio, power-pair, levy-difference.
    #[arg(long)]
    pub class: Option<String>,
    /// Interval length for lloc and sloc.
    #[arg(long)]
    pub c: Option<f64>,
    /// Power for power-ratio, first power for power-pair.
    #[arg(long)]
    pub t: Option<f64>,
    /// Regular-variation index of the jump density (levy-difference).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Slowly varying factor (levy-difference): `one`, a constant, `logpow:<p>`.
    #[arg(long)]
    pub l: Option<String>,
    /// `log:start,stop,count` or a list.
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Dropped-mass budget of the Poisson weights.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PredictArgs {
    /// nu-from-mu, mu-from-nu, power, compound, density-nu-from-mu,
    /// density-mu-from-nu, regular-variation.
    #[arg(long)]
    pub relation: Option<String>,
    #[arg(long)]
    pub law: Option<String>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Mean of the infinitely divisible law (mu-from-nu relations, index-1 regular variation).
    #[arg(long)]
    pub mean: Option<f64>,
    /// Poisson intensity of the compound relation.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub l: Option<String>,
    #[arg(long)]
    pub x: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct InvertArgs {
    /// Jump law on (cutoff, inf): `point:at=2`, `pareto:alpha=2`, `powerlaw:alpha=2`, ...
    #[arg(long)]
    pub jump: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub cells: Option<usize>,
    /// Laplace arguments, comma separated.
    #[arg(long)]
    pub laplace_t: Option<String>,
    /// Write the recovered measure as JSON here.
    #[arg(long)]
    pub measure: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateArgs {
    /// lognormal, weibull[:beta], pareto[:alpha], pareto_rv[:alpha] or all.
    #[arg(long)]
    pub example: Option<String>,
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ConvolveArgs {
    #[arg(long)]
    pub law: Option<String>,
    /// Second law; when given the output is the tail of law * with.
    #[arg(long)]
    pub with: Option<String>,
    /// Convolution power of --law.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub x: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn set_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("HT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("HT_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, CliError> {
    set_threads()?;
    let file = cli.config.as_deref();
    match cli.command {
        Command::Diagnose(a) => commands::diagnose(config::merge(&a, file)?),
        Command::Predict(a) => commands::predict(config::merge(&a, file)?),
        Command::Invert(a) => commands::invert(config::merge(&a, file)?),
        Command::Validate(a) => commands::validate(config::merge(&a, file)?),
        Command::Convolve(a) => commands::convolve(config::merge(&a, file)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
