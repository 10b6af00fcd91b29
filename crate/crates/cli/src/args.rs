use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "crbforge",
    version,
    about = "Derive, validate and benchmark symbolic Cramér–Rao bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one derivation and validate every target against the oracle.
    Derive(DeriveArgs),
    /// Run the five built-in scenarios and emit a suite report.
    Bench(BenchArgs),
    /// Aggregate a directory of trace files into failure/step tables.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Planner: "template" (deterministic) or "llm" (bridge).
    #[arg(long)]
    pub planner: Option<String>,
    /// Seed for sampling and trace identity.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Validation sample points per scenario.
    #[arg(long)]
    pub points: Option<usize>,
    /// Numeric tolerance (max relative error vs the oracle).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output directory for traces and reports.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    /// Fault injection: comma-separated from {sign-flip, low-cap,
    /// low-degree-cap}.
    #[arg(long)]
    pub inject: Option<String>,
    /// Replay LLM roles from recorded fixtures in this directory.
    #[arg(long)]
    pub fixtures: Option<std::path::PathBuf>,
    /// Chat-completion endpoint URL (llm planner).
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model name (llm planner).
    #[arg(long)]
    pub model: Option<String>,
    /// Request timeout in seconds (llm planner).
    #[arg(long)]
    pub timeout: Option<u64>,
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    /// Record wall-clock timings in trace files (breaks byte-for-byte
    /// reproducibility between runs).
    #[arg(long, default_value_t = false)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    /// Built-in scenario id (S01..S05) or path to a scenario JSON file.
    #[arg(long)]
    pub scenario: String,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Parallel worker count; 0 means one worker per logical core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory of trace JSON files.
    #[arg(long)]
    pub traces: std::path::PathBuf,
    /// Output directory for the aggregated tables.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}
