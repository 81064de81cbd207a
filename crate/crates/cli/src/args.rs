use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "qbsm",
    version,
    about = "Quantile-based global sensitivity analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the built-in models.
    ListModels,
    /// Estimate sensitivity measures for one model.
    Analyze(AnalyzeArgs),
    /// Track estimator error along a ladder of evaluation budgets.
    Converge(ConvergeArgs),
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct ModelSource {
    /// Built-in model name (see `list-models`).
    #[arg(long, group = "source")]
    pub model: Option<String>,
    /// JSON file describing a linear model; its file stem names the model.
    #[arg(long, group = "source")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Dlr,
    Bruteforce,
    Sobol,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Sobol,
    Pseudorandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    Q1,
    Q2,
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    #[arg(long, value_enum, default_value = "sobol")]
    pub sampler: SamplerArg,
    /// Seed of the pseudorandom generator; recorded but unused for Sobol'.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[arg(long, value_enum, default_value = "dlr")]
    pub method: MethodArg,
    /// Quantile levels: a single value, a comma list, or start:stop:step.
    #[arg(long, default_value = "0.01:0.99:0.01", allow_hyphen_values = true)]
    pub alpha: String,
    /// Sample size for DLR and Sobol' indices.
    #[arg(long, default_value_t = 16384)]
    pub n: usize,
    /// Bin count: a number, `auto` (floor(sqrt(n)) lowered to a divisor) or
    /// `grid` (largest such count keeping ten tail points per bin).
    #[arg(long, default_value = "auto")]
    pub m: String,
    #[arg(long, default_value_t = 256)]
    pub n_outer: usize,
    #[arg(long, default_value_t = 256)]
    pub n_inner: usize,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// `dlr`, `bruteforce` or `all` (both).
    #[arg(long, value_enum, default_value = "all")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "q2")]
    pub measure: MeasureArg,
    /// Evaluation budgets, comma separated; `2^k` is accepted.
    #[arg(long, default_value = "2^10,2^11,2^12,2^13,2^14,2^15,2^16")]
    pub ladder: String,
    #[arg(long, default_value_t = 8)]
    pub replicates: usize,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}
