use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Beam alignment experiments: two-stage search, baselines and bounds.
#[derive(Debug, Parser)]
#[command(name = "beamalign", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rate-optimal (K*, α*), decay-rate gain over exhaustive search and feedback bits.
    Params(ParamsArgs),
    /// Misalignment upper bound over the budget grid.
    Bounds(BoundsArgs),
    /// Monte Carlo misalignment probability.
    Simulate(RunArgs),
    /// Empirical (K, α) sweep for the two-stage search.
    Sweep(SweepArgs),
    /// Spectral efficiency after alignment.
    Se(RunArgs),
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    /// Number of beam pairs.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub n: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Options shared by every config-driven command.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON config or a manifest written by an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: Option<u64>,
    /// Comma-separated schemes, e.g. `es,hs_equal,otss:117:0.93`.
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<String>>,
    /// Comma-separated budgets in dB.
    #[arg(long = "budget-db", value_delimiter = ',', allow_negative_numbers = true)]
    pub budget_db: Option<Vec<f64>>,
    /// Config override `dotted.key=value`; the value is read as JSON when it parses.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Add per-budget bound-minimizing (K, α) rows.
    #[arg(long)]
    pub optimize: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Add per-budget bound-optimized two-stage rows.
    #[arg(long)]
    pub optimize: bool,
    /// Exit with status 1 if any row could not be computed.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Comma-separated K values (overrides `sweep.k_grid`).
    #[arg(long = "k-grid", value_delimiter = ',')]
    pub k_grid: Option<Vec<usize>>,
    /// Comma-separated α values (overrides `sweep.alpha_grid`).
    #[arg(long = "alpha-grid", value_delimiter = ',')]
    pub alpha_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub strict: bool,
}
