//! `interpnorm`: evaluate interpolation norms, solve regularized problems,
//! and run activation-rate benchmarks.
//!
//! Exit codes: 0 success, 2 invalid input, 3 a solver stopped at its
//! iteration cap (outputs are still written).

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "interpnorm",
    version,
    about = "Interpolation norms and randomized Douglas-Rachford"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Evaluate a norm (or its dual with --dual) at a vector.
    EvalNorm(EvalArgs),
    /// Same as `eval-norm --dual`.
    EvalDual(EvalArgs),
    /// Solve a regularized empirical risk problem.
    Solve(SolveArgs),
    /// Run an activation-rate sweep described by a JSON file.
    Sweep(SweepArgs),
    /// Generate a synthetic data set.
    GenData(GenDataArgs),
    /// Run the built-in benchmarks: hinge sweep and lasso distance study.
    Bench(BenchArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Norm description (JSON).
    pub norm: PathBuf,
    /// Vector CSV: one column, one row, or a mode-1 unfolding for tensor norms.
    pub vector: PathBuf,
    #[arg(long)]
    pub dual: bool,
    /// Relative duality gap at which the primal evaluation stops.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Write the minimizing decomposition to this CSV (primal only).
    #[arg(long)]
    pub decompose: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    /// Douglas-Rachford, all blocks every iteration.
    Dr,
    /// Douglas-Rachford with random block activation.
    DrRandom,
    Fista,
    /// Forward-backward (proximal gradient).
    Fb,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Problem description (JSON).
    pub problem: PathBuf,
    /// Solver configuration (JSON, DrConfig fields).
    pub config: PathBuf,
    #[arg(long, value_enum, default_value = "dr")]
    pub algo: Algo,
    #[arg(long)]
    pub out: PathBuf,
    /// Write the iteration trace to this CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Record every N-th iteration in the trace.
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Sweep description (JSON).
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; defaults to INTERPNORM_THREADS, then all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub base_seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct GenDataArgs {
    /// Data recipe (JSON, DataGenSpec fields).
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    /// 50 × 200 hinge benchmark.
    Desk,
    /// 100 × 1000 hinge benchmark.
    Paper,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "desk")]
    pub scale: Scale,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated activation rates.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1])]
    pub rates: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Skip the lasso distance-to-solution study.
    #[arg(long)]
    pub no_distance: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded location.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().collect();
    match commands::dispatch(cli.command, argv) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::Status::Invalid.code())
        }
    }
}
