//! `siuc`: reproducible batch runs of the SI-aware scheduling toolkit.
//!
//! Exit codes: 0 success, 2 validation/certification failure, 3 infeasible
//! model, 4 I/O or schema error.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Parser)]
#[command(
    name = "siuc",
    version,
    about = "Frequency-constrained unit commitment with synthetic inertia"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// SI capability, damping and loss curves of one turbine (CSV).
    Turbine(Args),
    /// Frequency response to the design contingency (trajectory CSV, metrics JSON).
    Simulate(Args),
    /// Generate and certify nadir planes (planes JSON, certification report).
    Linearize(Args),
    /// Solve a unit-commitment instance (solution JSON, dispatch CSV, optional MPS).
    Schedule(Args),
    /// Closed form vs simulator over sampled operating points (report JSON).
    Validate(Args),
}

#[derive(clap::Args)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Verbosity::Normal)]
    verbosity: Verbosity,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Verbosity {
    Quiet,
    Normal,
}

type Runner = fn(&[u8], &std::path::Path, Option<u64>) -> Result<String, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args, run): (&str, &Args, Runner) = match &cli.command {
        Command::Turbine(a) => ("turbine", a, commands::turbine::run),
        Command::Simulate(a) => ("simulate", a, commands::simulate::run),
        Command::Linearize(a) => ("linearize", a, commands::linearize::run),
        Command::Schedule(a) => ("schedule", a, commands::schedule::run),
        Command::Validate(a) => ("validate", a, commands::validate::run),
    };
    let result = std::fs::read(&args.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.config.display())))
        .and_then(|bytes| run(&bytes, &args.out, args.seed));
    match result {
        Ok(summary) => {
            if args.verbosity == Verbosity::Normal {
                println!("{name}: {summary}; outputs in {}", args.out.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{name}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
