//! Command-line front end: flat key-value configs in, CSV and transcript
//! logs out. All randomness flows from the config's master seed.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Exit codes: 0 ran to completion (validation failures are data),
/// 1 a verification check failed, 2 configuration error, 3 runtime fault.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, arguments, or input files.
    Config(String),
    /// A matrix failed its weight or rank check.
    VerifyFailed(String),
    /// A session aborted mid-protocol (pad exhaustion, channel loss).
    Fault(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerifyFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Fault(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::VerifyFailed(m) | CliError::Fault(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "eprsim",
    about = "EPR-pair key distribution simulator",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Print the privacy-bound table for one or more error rates
    Bounds(BoundsArgs),
    /// Generate a privacy-amplification matrix file
    Genmat(GenmatArgs),
    /// Check a matrix file against a minimum-weight target
    Verify(VerifyArgs),
    /// Run sessions from a config file and emit CSV rows
    Run(RunArgs),
    /// Re-run the config across a one-parameter grid and aggregate
    Sweep(SweepArgs),
}

#[derive(Args)]
pub struct BoundsArgs {
    /// Error rates to tabulate (comma separated)
    #[arg(long, value_delimiter = ',', required = true)]
    pub epsilon: Vec<f64>,
    /// Compression-slack parameter (0 allowed here; theta becomes 1)
    #[arg(long)]
    pub tau: f64,
    /// Reconciled-set size
    #[arg(long)]
    pub r: usize,
    /// Key length to judge feasibility against
    #[arg(long)]
    pub m: usize,
}

#[derive(Args)]
pub struct GenmatArgs {
    /// Rows (key length)
    #[arg(long)]
    pub m: usize,
    /// Columns (reconciled-set size)
    #[arg(long)]
    pub r: usize,
    /// Minimum nonzero-combination weight to certify
    #[arg(long)]
    pub d_k: usize,
    /// Master seed for the search
    #[arg(long)]
    pub seed: u64,
    /// Output file path
    #[arg(long)]
    pub out: PathBuf,
    /// Candidate budget before giving up
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Matrix file to check
    #[arg(long)]
    pub matrix: PathBuf,
    /// Required minimum combination weight
    #[arg(long)]
    pub d_k: usize,
}

#[derive(Args)]
pub struct RunArgs {
    /// Config file (flat key = value lines)
    #[arg(long)]
    pub config: PathBuf,
    /// Override the config's master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the config's session count
    #[arg(long)]
    pub sessions: Option<u64>,
    /// Override the config's CSV output path (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Config file providing the base point
    #[arg(long)]
    pub config: PathBuf,
    /// Parameter to sweep: epsilon, tau, r, intercept_prob, or delta
    #[arg(long)]
    pub param: String,
    /// Grid values (comma separated)
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<f64>,
    /// Override the config's master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the config's per-point session count
    #[arg(long)]
    pub sessions: Option<u64>,
    /// Override the config's CSV output path (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Dispatch a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Bounds(args) => commands::cmd_bounds(&args),
        Command::Genmat(args) => commands::cmd_genmat(&args),
        Command::Verify(args) => commands::cmd_verify(&args),
        Command::Run(args) => commands::cmd_run(&args),
        Command::Sweep(args) => commands::cmd_sweep(&args),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.exit_code()
        }
    }
}
