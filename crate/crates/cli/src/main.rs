//! `segstat`: segmentation metrics and the precision of their test-set means.

mod commands;
mod error;
mod metrics_csv;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use segstat_core::ci::DEFAULT_RESAMPLES;
use segstat_core::planner::{DEFAULT_SIGMAS, DEFAULT_SIZES};
use segstat_core::subsample::DEFAULT_REPEATS;
use segstat_core::ConfidenceLevel;

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "segstat", version, about = "Segmentation metrics and confidence intervals for their mean")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dice and HD95 for every gt/pred NIfTI pair with the same file name.
    Metrics(MetricsArgs),
    /// Parametric and/or bootstrap CI of one metric column.
    Ci(CiArgs),
    /// Repeated subsample drawings of size k from one metric column.
    Subsample(SubsampleArgs),
    /// Gaussian SEM / CI table over sigma x test-set size.
    Table(TableArgs),
    /// Smallest test set whose CI width is at most the target.
    Plan(PlanArgs),
    /// Monte Carlo coverage of parametric and bootstrap CIs.
    Coverage(CoverageArgs),
}

#[derive(clap::Args, Debug)]
pub struct MetricsArgs {
    #[arg(long)]
    pub gt_dir: PathBuf,
    #[arg(long)]
    pub pred_dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub labels: Vec<u32>,
    /// Wide metrics CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Long CSV with one row per (subject, label) and flags.
    #[arg(long)]
    pub long_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CiMethod {
    Parametric,
    Bootstrap,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Divisor {
    Population,
    Sample,
}

#[derive(clap::Args, Debug)]
pub struct CiArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub column: String,
    #[arg(long, value_enum, default_value_t = CiMethod::Both)]
    pub method: CiMethod,
    #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
    pub m: usize,
    #[arg(long, default_value = "0.95", value_parser = parse_level)]
    pub level: ConfidenceLevel,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Divisor::Population)]
    pub sd_divisor: Divisor,
    /// JSON report; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV of bootstrap resample means.
    #[arg(long)]
    pub means_out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct SubsampleArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub column: String,
    /// Subsample sizes; default 10, 20, 30, 50, 100, 200, ... below n, then n.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    pub repeats: usize,
    #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
    pub m: usize,
    #[arg(long, default_value = "0.95", value_parser = parse_level)]
    pub level: ConfidenceLevel,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub with_replacement: bool,
    /// Per-size CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Long CSV with one row per drawing.
    #[arg(long)]
    pub draws_out: Option<PathBuf>,
    /// JSON with the configuration and per-size rows.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Md,
    Csv,
    Json,
}

#[derive(clap::Args, Debug)]
pub struct TableArgs {
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIGMAS.to_vec())]
    pub sigmas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIZES.to_vec())]
    pub sizes: Vec<usize>,
    #[arg(long, value_enum, default_value_t = TableFormat::Md)]
    pub format: TableFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlanFormat {
    Text,
    Json,
}

#[derive(clap::Args, Debug)]
pub struct PlanArgs {
    #[arg(long)]
    pub sigma: f64,
    /// Target full CI width, in metric units.
    #[arg(long)]
    pub width: f64,
    #[arg(long, default_value = "0.95", value_parser = parse_level)]
    pub level: ConfidenceLevel,
    #[arg(long, value_enum, default_value_t = PlanFormat::Text)]
    pub format: PlanFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(clap::Args, Debug)]
pub struct CoverageArgs {
    /// Preset name or `gaussian:M,SD`, `truncated:M,SD[,LO,HI]`,
    /// `lognormal:M,SD,FLOOR`, `two-point:LOW,HIGH,P`, `constant:V`.
    #[arg(long, default_value = "hippocampus-3d-dice")]
    pub dist: String,
    #[arg(long, default_value_t = 110)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Bootstrap resamples per trial; 0 skips the bootstrap.
    #[arg(long, default_value_t = 2000)]
    pub m: usize,
    #[arg(long, default_value = "0.95", value_parser = parse_level)]
    pub level: ConfidenceLevel,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_level(s: &str) -> Result<ConfidenceLevel, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    ConfidenceLevel::new(v).map_err(|e| e.to_string())
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Some items failed; the rest were written.
    Partial,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SEGSTAT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or(CliError::BadThreads(raw.clone()))?;
    if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
        log::warn!("thread pool already initialised; SEGSTAT_THREADS ignored");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Metrics(a) => commands::metrics(&a),
        Command::Ci(a) => commands::ci(&a),
        Command::Subsample(a) => commands::subsample(&a),
        Command::Table(a) => commands::table(&a),
        Command::Plan(a) => commands::plan(&a),
        Command::Coverage(a) => commands::coverage(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
