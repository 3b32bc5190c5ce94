//! `degenflow` command line.
//!
//! Every subcommand prints (or writes to `--out`) a JSON document holding
//! the effective config, the results and a `passed` flag. Exit status is 0
//! when all checks pass, 1 on a failed check or runtime error, 2 on bad usage.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "degenflow",
    version,
    about = "Worst-case PE signals for x' = -S(t) x"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    config: Config,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Subcommand)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Extremal μ(a, b) and the scaling ratio μ(1 + b²)/a.
    Mu,
    /// Extremal parameters, optimality residuals and trajectory.
    Extremal,
    /// Brute-force μ over piecewise-constant controls, compared with the extremal.
    Oracle,
    /// Decay rate of `--signal`, or of the optimal periodic control.
    Decay,
    /// L2 gain bounds and the worst-input simulation.
    Gain,
    /// Chained GPE signal over a window schedule.
    Gpe,
    /// Window checks on `--signal`, or the extremal certificate.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum Preset {
    Convergent,
    Divergent,
}

#[derive(Debug, Clone, Serialize, clap::Args)]
struct Config {
    /// Lower window bound.
    #[arg(long, global = true)]
    a: Option<f64>,
    /// Upper window bound.
    #[arg(long, global = true)]
    b: Option<f64>,
    /// Window length.
    #[arg(long = "T", global = true, default_value_t = 1.0)]
    #[serde(rename = "T")]
    t: f64,
    /// State dimension (only 2 is synthesized).
    #[arg(long, global = true, default_value_t = 2)]
    n: usize,
    /// Residual tolerance for certificate checks.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Oracle random restarts.
    #[arg(long, global = true, default_value_t = degenflow::oracle::DEFAULT_SEEDS)]
    seeds: usize,
    /// Oracle control cells.
    #[arg(long, global = true, default_value_t = degenflow::oracle::DEFAULT_SEGMENTS)]
    segments: usize,
    /// Periods for decay and gain runs.
    #[arg(long, global = true, default_value_t = degenflow::gain::DEFAULT_PERIODS)]
    periods: usize,
    /// Signal JSON file.
    #[arg(long, global = true)]
    signal: Option<PathBuf>,
    /// GPE schedule JSON file.
    #[arg(long, global = true)]
    schedule: Option<PathBuf>,
    /// Built-in GPE schedule, used when no file is given.
    #[arg(long, global = true, value_enum, default_value_t = Preset::Convergent)]
    preset: Preset,
    /// GPE prefix length.
    #[arg(long, global = true, default_value_t = degenflow::gpe::DEFAULT_PREFIX)]
    prefix: usize,
    /// Output file, written atomically. Stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] degenflow::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(degenflow::Error::Domain(_)) => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) | CliError::Core(degenflow::Error::Domain(_)) => "usage",
            CliError::Core(_) => "numerical",
            CliError::Io { .. } => "io",
            CliError::Json(_) => "json",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command, &cli.config) {
        Ok(outcome) => match output::emit(cli.command, &cli.config, &outcome) {
            Ok(()) if outcome.passed => ExitCode::SUCCESS,
            Ok(()) => ExitCode::from(1),
            Err(e) => fail(cli.command, &cli.config, e),
        },
        Err(e) => fail(cli.command, &cli.config, e),
    }
}

fn fail(command: Command, config: &Config, err: CliError) -> ExitCode {
    eprintln!("degenflow: {err}");
    println!("{}", output::error_report(command, config, &err));
    ExitCode::from(err.exit_code())
}
