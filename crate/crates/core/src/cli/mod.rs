//! The `divcurate` command line.
//!
//! Every subcommand accepts `--input`, `--output`, `--config` and
//! `--workers`. Settings resolve as flag, then config file, then built-in
//! default, and the effective values are recorded in a
//! `<output>.manifest.json` next to each output file.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input or arguments,
//! 3 internal invariant breach.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyze::StatsError;
use crate::decile::DecileError;
use crate::filter::FilterError;
use crate::ingest::{GenerationRecord, IngestError, ResponseRecord};
use crate::semdiv::SemdivError;
use crate::textstat::MetricError;

pub use config::{RunManifest, Settings};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Subcommand names, which double as config-file table names.
pub const SUBCOMMANDS: &[&str] = &[
    "score",
    "build-map",
    "filter",
    "dd-report",
    "correlate",
    "ttest",
    "pairs-for-eval",
    "pos-report",
    "win-rate",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Validation(String),
    #[error("internal error: {0}")]
    Internal(String),
    /// Argument parsing finished early: a usage error, `--help` or `--version`.
    #[error("{message}")]
    Usage { message: String, code: i32 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Internal(_) => 3,
            CliError::Usage { code, .. } => *code,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::InvariantViolation { .. } => CliError::Internal(e.to_string()),
            e if e.is_io() => CliError::Io(e.to_string()),
            e => CliError::Validation(e.to_string()),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SemdivError> for CliError {
    fn from(e: SemdivError) -> Self {
        match e {
            SemdivError::Io { .. } => CliError::Io(e.to_string()),
            e => CliError::Validation(e.to_string()),
        }
    }
}

impl From<DecileError> for CliError {
    fn from(e: DecileError) -> Self {
        match e {
            DecileError::Ingest(inner) => inner.into(),
            e => CliError::Validation(e.to_string()),
        }
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "divcurate", version, about = "Diversity scoring and preference-data curation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Input file.
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    /// Output file; a run manifest is written next to it.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// TOML config file. Flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (0 = one per core). Output order never depends on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Skip malformed input lines instead of stopping at the first one.
    #[arg(long)]
    pub lenient: bool,
}

/// Which responses of each generation record feed a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Responses {
    First,
    Second,
    #[default]
    Both,
}

impl Responses {
    pub fn select(self, rec: &GenerationRecord) -> Vec<(&'static str, &ResponseRecord)> {
        match self {
            Responses::First => vec![("first", &rec.first)],
            Responses::Second => vec![("second", &rec.second)],
            Responses::Both => vec![("first", &rec.first), ("second", &rec.second)],
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Annotate both responses of every record with metric values.
    Score(ScoreArgs),
    /// Build a per-length decile map for one metric.
    BuildMap(BuildMapArgs),
    /// Build preference pairs with Diverse-NS, Diverse-NS-Lite or DivPO.
    Filter(FilterArgs),
    /// Mean diversity decile of base and tuned outputs, and their difference.
    DdReport(DdReportArgs),
    /// Pearson correlations between metrics.
    Correlate(CorrelateArgs),
    /// Independent two-sample t-tests between two scored files.
    Ttest(TtestArgs),
    /// Least similar cross-method response pairs for side-by-side judging.
    PairsForEval(PairsForEvalArgs),
    /// Most widespread POS-tag bigrams in a tagged corpus.
    PosReport(PosReportArgs),
    /// Win and tie percentages from a judgments file.
    WinRate(WinRateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Score(_) => "score",
            Command::BuildMap(_) => "build-map",
            Command::Filter(_) => "filter",
            Command::DdReport(_) => "dd-report",
            Command::Correlate(_) => "correlate",
            Command::Ttest(_) => "ttest",
            Command::PairsForEval(_) => "pairs-for-eval",
            Command::PosReport(_) => "pos-report",
            Command::WinRate(_) => "win-rate",
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::Score(a) => &a.common,
            Command::BuildMap(a) => &a.common,
            Command::Filter(a) => &a.common,
            Command::DdReport(a) => &a.common,
            Command::Correlate(a) => &a.common,
            Command::Ttest(a) => &a.common,
            Command::PairsForEval(a) => &a.common,
            Command::PosReport(a) => &a.common,
            Command::WinRate(a) => &a.common,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated metric names (ttr, mattr, maas, hdd, mtld, mtld_ma,
    /// mtld_ma_bi, entropy, ngram_div, comp_ratio, dsi).
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    /// Embedding store holding the matrices named by `embedding_ref`.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub mattr_window: Option<usize>,
    #[arg(long)]
    pub hdd_sample: Option<usize>,
    #[arg(long)]
    pub mtld_threshold: Option<f64>,
    #[arg(long)]
    pub ngram_max_n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BuildMapArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Metric whose values are bucketed.
    #[arg(long)]
    pub metric: Option<String>,
    /// Buckets with fewer samples are merged into a neighbour.
    #[arg(long)]
    pub min_bucket: Option<usize>,
    #[arg(long, value_enum)]
    pub responses: Option<Responses>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// dns, dns-lite or divpo.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub max_len_delta: Option<usize>,
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Ranking key for top-K selection.
    #[arg(long)]
    pub gain_metric: Option<String>,
    #[arg(long)]
    pub diversity_metric: Option<String>,
    #[arg(long)]
    pub quality_metric: Option<String>,
    #[arg(long)]
    pub divpo_upper_pct: Option<f64>,
    #[arg(long)]
    pub divpo_lower_pct: Option<f64>,
    /// Drop records lacking a required score instead of failing.
    #[arg(long)]
    pub skip_missing: bool,
}

#[derive(Debug, Args)]
pub struct DdReportArgs {
    /// `--input` is the base model's scored file.
    #[command(flatten)]
    pub common: CommonArgs,
    /// Scored file of the tuned model.
    #[arg(long)]
    pub tuned: Option<PathBuf>,
    /// Decile map file; repeat for several metrics.
    #[arg(long = "map")]
    pub maps: Vec<PathBuf>,
    /// Tab-separated bar values for plotting.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub responses: Option<Responses>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Metrics on one axis, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub x: Vec<String>,
    /// Metrics on the other axis, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub y: Vec<String>,
    #[arg(long, value_enum)]
    pub responses: Option<Responses>,
}

#[derive(Debug, Args)]
pub struct TtestArgs {
    /// `--input` is sample A.
    #[command(flatten)]
    pub common: CommonArgs,
    /// Scored file for sample B.
    #[arg(long)]
    pub against: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    /// Headline Welch's test instead of Student's pooled test.
    #[arg(long)]
    pub welch: bool,
    #[arg(long, value_enum)]
    pub responses: Option<Responses>,
}

#[derive(Debug, Args)]
pub struct PairsForEvalArgs {
    /// `--input` is a `responses` file of `{prompt_id, method, text}` lines.
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub method_a: Option<String>,
    #[arg(long)]
    pub method_b: Option<String>,
    /// Number of pairs to keep.
    #[arg(short = 'k', long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PosReportArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub top_n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct WinRateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Parses `args` (program name first) and runs the command in-process.
pub fn run_with_args<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage {
        message: e.render().to_string(),
        code: if e.use_stderr() { 2 } else { 0 },
    })?;
    run(cli)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let command = cli.command;
    let common = command.common();
    let settings = Settings::load(common.config.as_deref(), command.name(), commands::known_keys(&command))?;
    let workers = settings.pick(common.workers, "workers", 0usize)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    pool.install(|| commands::dispatch(&command, &settings))
}

/// Entry point for the binary: runs with the process arguments, reports any
/// error on stderr and returns the exit code.
pub fn main_exit() -> i32 {
    match run_with_args(std::env::args_os()) {
        Ok(()) => 0,
        Err(CliError::Usage { message, code }) => {
            if code == 0 {
                print!("{message}");
            } else {
                eprint!("{message}");
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
