//! `arqshare`: solve, analyze, and simulate secondary-user transmission
//! policies beside a retransmitting primary link.

mod commands;
mod config;
mod error;
mod output;
mod sweep;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use arqshare::{Metric, SolveMethod};

use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "arqshare",
    version,
    about = "Randomized secondary-user transmission policies beside a retransmitting primary link",
    after_help = "Exit codes: 0 success; 1 runtime or validation failure; 2 usage or \
                  configuration error; 3 infeasible constraint set; 4 numerical failure."
)]
pub(crate) struct Cli {
    #[command(subcommand)]
    pub(crate) command: Command,
}

#[derive(Subcommand)]
pub(crate) enum Command {
    /// Map a link budget to failure probabilities and interference factors
    Phy(PhyArgs),
    /// Evaluate a fixed policy: steady state and long-run metrics
    Analyze(AnalyzeArgs),
    /// Solve for the reward-optimal policy under a primary-cost cap
    Optimize(OptimizeArgs),
    /// Re-solve across a one-variable grid, one output row per point
    Sweep(SweepArgs),
    /// Run the slot-level simulator on a fixed policy
    Simulate(SimulateArgs),
    /// Run randomized self-checks of the analysis layer
    Verify(VerifyArgs),
}

#[derive(Args)]
pub(crate) struct CommonArgs {
    /// JSON experiment configuration; flags override file values
    #[arg(long, value_name = "PATH")]
    pub(crate) config: Option<PathBuf>,
    /// Write output to this file instead of stdout
    #[arg(long, value_name = "PATH")]
    pub(crate) out: Option<PathBuf>,
}

#[derive(Args)]
pub(crate) struct PhyArgs {
    #[command(flatten)]
    pub(crate) common: CommonArgs,
    /// Seed for the fading Monte Carlo
    #[arg(long)]
    pub(crate) seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub(crate) format: FormatArg,
}

#[derive(Args)]
pub(crate) struct AnalyzeArgs {
    #[command(flatten)]
    pub(crate) common: CommonArgs,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub(crate) format: FormatArg,
}

#[derive(Args)]
pub(crate) struct OptimizeArgs {
    #[command(flatten)]
    pub(crate) common: CommonArgs,
    /// Solver (default: vertical when lambda_s = 0 and the metric is
    /// throughput or failure_prob, lp otherwise)
    #[arg(long, value_enum)]
    pub(crate) solver: Option<SolverArg>,
    /// Capped metric
    #[arg(long, value_enum)]
    pub(crate) metric: Option<MetricArg>,
    /// Relative slack on the metric's interference-free value
    #[arg(long, allow_negative_numbers = true)]
    pub(crate) epsilon: Option<f64>,
    /// Run flooding solvers outside their optimality regime (nu* > nu)
    #[arg(long)]
    pub(crate) allow_nonuniform: bool,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub(crate) format: FormatArg,
}

#[derive(Args)]
pub(crate) struct SweepArgs {
    #[command(flatten)]
    pub(crate) common: CommonArgs,
    /// Solver for every row (default: per-row rule as in optimize)
    #[arg(long, value_enum)]
    pub(crate) solver: Option<SolverArg>,
    /// Capped metric
    #[arg(long, value_enum)]
    pub(crate) metric: Option<MetricArg>,
    /// Relative slack (ignored when sweeping epsilon)
    #[arg(long, allow_negative_numbers = true)]
    pub(crate) epsilon: Option<f64>,
    /// Simulator seed for the validation columns (same for every row)
    #[arg(long)]
    pub(crate) seed: Option<u64>,
    /// Adding validation columns: simulate each row for this many slots
    #[arg(long)]
    pub(crate) slots: Option<u64>,
    /// Worker threads for the row solves (default: all cores)
    #[arg(long)]
    pub(crate) workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub(crate) format: FormatArg,
}

#[derive(Args)]
pub(crate) struct SimulateArgs {
    #[command(flatten)]
    pub(crate) common: CommonArgs,
    /// Simulator seed
    #[arg(long)]
    pub(crate) seed: Option<u64>,
    /// Total slots (warmup included)
    #[arg(long)]
    pub(crate) slots: Option<u64>,
    /// Also write a per-slot CSV trace to this file
    #[arg(long, value_name = "PATH")]
    pub(crate) trace: Option<PathBuf>,
    /// Compare estimates against the closed forms (exit 1 beyond 5 SE)
    #[arg(long)]
    pub(crate) validate: bool,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub(crate) format: FormatArg,
}

#[derive(Args)]
pub(crate) struct VerifyArgs {
    /// Write output to this file instead of stdout
    #[arg(long, value_name = "PATH")]
    pub(crate) out: Option<PathBuf>,
    /// Random instances per check
    #[arg(long, default_value_t = 200)]
    pub(crate) instances: u64,
    /// Seed for the instance sampler
    #[arg(long, default_value_t = 0)]
    pub(crate) seed: u64,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub(crate) format: FormatArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum FormatArg {
    Json,
    Csv,
    Text,
}

/// Metric names match the configuration schema.
#[derive(Debug, Clone, Copy, ValueEnum)]
pub(crate) enum MetricArg {
    Throughput,
    #[value(name = "failure_prob")]
    FailureProb,
    #[value(name = "num_tx")]
    NumTx,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Throughput => Metric::Throughput,
            MetricArg::FailureProb => Metric::FailureProb,
            MetricArg::NumTx => Metric::NumTx,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub(crate) enum SolverArg {
    Lp,
    Vertical,
    Horizontal,
    Enumerate,
}

impl From<SolverArg> for SolveMethod {
    fn from(s: SolverArg) -> SolveMethod {
        match s {
            SolverArg::Lp => SolveMethod::Lp,
            SolverArg::Vertical => SolveMethod::Vertical,
            SolverArg::Horizontal => SolveMethod::Horizontal,
            SolverArg::Enumerate => SolveMethod::Enumerate,
        }
    }
}

/// Rejects formats a command does not produce.
pub(crate) fn require_format(
    got: FormatArg,
    allowed: &[FormatArg],
    command: &str,
) -> Result<(), CliError> {
    if allowed.contains(&got) {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "{command} does not support --format {}",
            match got {
                FormatArg::Json => "json",
                FormatArg::Csv => "csv",
                FormatArg::Text => "text",
            }
        )))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Phy(args) => commands::phy(&args),
        Command::Analyze(args) => commands::analyze(&args),
        Command::Optimize(args) => commands::optimize(&args),
        Command::Sweep(args) => sweep::run(&args),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Verify(args) => verify::run(&args),
    }
}
