//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lbaudit::significance::{Alternative, Correction};
use lbaudit::Method;

#[derive(Debug, Parser)]
#[command(name = "lbaudit", version, about = "Audit multi-task benchmark leaderboards")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Score matrix (CSV, or JSON when the name ends in .json).
    #[arg(long, global = true)]
    pub matrix: Option<PathBuf>,
    /// Per-task metric metadata (JSON).
    #[arg(long, global = true)]
    pub metrics: Option<PathBuf>,
    /// Use a bundled matrix instead of --matrix.
    #[arg(long, global = true, value_enum)]
    pub fixture: Option<Fixture>,
    /// Audit configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    /// Record the wall-clock time in the provenance block.
    #[arg(long, global = true)]
    pub timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    Lra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count distinct Top-k tuples across task subsets.
    Audit(AuditArgs),
    /// Rank correlation of subset rankings with the full ranking.
    Corr(CorrArgs),
    /// Aggregate scores and rank the models.
    Aggregate(AggregateArgs),
    /// Compare two models across datasets with replicates.
    Compare(CompareArgs),
    /// Simulate the boosting attack against a reused holdout.
    SimulateReuse(ReuseArgs),
    /// Audit, correlation and aggregation in a single report.
    Report(AuditArgs),
}

#[derive(Debug, Clone, Args)]
pub struct AggregationArgs {
    /// Aggregation method.
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    /// Bin width for robust_average_rank.
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Map scores to (s - random) / (human - random) first.
    #[arg(long)]
    pub human_normalize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub aggregation: AggregationArgs,
    /// Subset sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Leaderboard depths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    /// Largest subset count enumerated exhaustively per size.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Print per-subset tables for sizes with at most this many subsets.
    #[arg(long, default_value_t = 100)]
    pub table_limit: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CorrArgs {
    #[command(flatten)]
    pub aggregation: AggregationArgs,
    /// Methods compared in the agreement matrix.
    #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "arithmetic_mean,median")]
    pub agreement: Vec<Method>,
}

#[derive(Debug, Clone, Args)]
pub struct AggregateArgs {
    #[command(flatten)]
    pub aggregation: AggregationArgs,
    /// Restrict to these tasks, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub tasks: Option<Vec<String>>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Replicate JSON: {"datasets": {"<id>": {"A": [..], "B": [..]}}}.
    #[arg(long)]
    pub replicates: PathBuf,
    /// Significance level.
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, value_parser = parse_correction, default_value = "holm")]
    pub correction: Correction,
    #[arg(long, value_parser = parse_alternative, default_value = "b-greater")]
    pub alternative: Alternative,
    /// Bootstrap draws for p(A <= B).
    #[arg(long, default_value_t = 10_000)]
    pub bootstrap_n: u64,
    /// Monte-Carlo resamples when exact permutation is too large.
    #[arg(long, default_value_t = 100_000)]
    pub resamples: u64,
    /// Largest reassignment count enumerated exactly.
    #[arg(long, default_value_t = 100_000)]
    pub exact_limit: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MechanismChoice {
    Naive,
    Ladder,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct ReuseArgs {
    /// Holdout size.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Query counts, comma separated.
    #[arg(long = "i", value_delimiter = ',', default_values_t = [10u64, 100, 1000])]
    pub i_schedule: Vec<u64>,
    #[arg(long, value_enum, default_value_t = MechanismChoice::Both)]
    pub mechanism: MechanismChoice,
    /// Ladder step; defaults to 1/sqrt(n).
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub trials: u64,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: lbaudit::Error| e.to_string())
}

fn parse_correction(s: &str) -> Result<Correction, String> {
    s.parse().map_err(|e: lbaudit::Error| e.to_string())
}

fn parse_alternative(s: &str) -> Result<Alternative, String> {
    s.parse().map_err(|e: lbaudit::Error| e.to_string())
}
