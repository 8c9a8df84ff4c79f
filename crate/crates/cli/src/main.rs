//! `svlet`: denoise matrices, inspect SURE tuning, run benchmark sweeps and
//! check random-matrix laws.
//!
//! Exit codes: 0 success, 2 usage or contract error, 3 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "svlet", version, about = "Singular value shrinkage denoising")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Denoise a CSV matrix and write the estimate.
    Denoise(DenoiseArgs),
    /// Print the SURE tuning trace (or SVLET solution) as CSV.
    Tune(TuneArgs),
    /// Run NMSE sweeps, C/K sensitivity and timing; write CSV tables.
    Bench(BenchArgs),
    /// Monte Carlo checks of the bulk edge, bulk law, spike locations and overlaps.
    RmtCheck(RmtArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DenoiseMethod {
    Svlet,
    Svst,
    Atn,
    Svlt,
    Svht,
    OptShrink,
    Eym,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TuneTarget {
    Svst,
    Atn,
    Svlt,
    Svlet,
}

#[derive(Debug, Args)]
struct DenoiseArgs {
    /// Observed matrix, comma-separated rows.
    input: PathBuf,
    /// Noise standard deviation.
    #[arg(long)]
    sigma: f64,
    #[arg(long, value_enum)]
    method: DenoiseMethod,
    /// SVLET scale constant, T = C sigma.
    #[arg(long = "C", default_value_t = svlet_core::harness::DEFAULT_C)]
    c: f64,
    /// SVLET order.
    #[arg(long = "K", default_value_t = svlet_core::harness::DEFAULT_K)]
    k: usize,
    /// Truncation rank for `eym`.
    #[arg(long)]
    rank: Option<usize>,
    /// Soft threshold; tuned by SURE when omitted.
    #[arg(long)]
    lambda: Option<f64>,
    /// Hard threshold; defaults to 4/sqrt(3) sqrt(n) sigma.
    #[arg(long)]
    mu: Option<f64>,
    /// ATN threshold; give with --gamma, or omit both to tune.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// SVLT slope, index center and offset; all three or none.
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long)]
    p2: Option<f64>,
    #[arg(long)]
    p3: Option<f64>,
    /// Where to write the estimate.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct TuneArgs {
    input: PathBuf,
    #[arg(long)]
    sigma: f64,
    #[arg(long, value_enum)]
    family: TuneTarget,
    #[arg(long = "C", default_value_t = svlet_core::harness::DEFAULT_C)]
    c: f64,
    #[arg(long = "K", default_value_t = svlet_core::harness::DEFAULT_K)]
    k: usize,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["paper"])]
    preset: Option<String>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RmtArgs {
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Denoise(args) => commands::denoise(args),
        Command::Tune(args) => commands::tune(args),
        Command::Bench(args) => commands::bench(args),
        Command::RmtCheck(args) => commands::rmt_check(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
