//! hermite-lab: simulation and numerical checks for Hermite processes.

mod commands;
mod report;
mod settings;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hermite_lab::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_TOLERANCE: u8 = 4;
pub const EXIT_MISSING_INPUT: u8 = 5;

const EXIT_CODES: &str = "Exit codes:
  0  success
  1  other runtime failure (I/O, malformed file)
  2  usage error (unknown flag, bad value)
  3  configuration error (invalid or conflicting settings, budget exceeded)
  4  numeric tolerance not reached
  5  missing input

HERMITE_LAB_THREADS caps the number of worker threads.";

#[derive(Parser, Debug)]
#[command(name = "hermite-lab", version, about, after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// key=value configuration file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, global = true)]
    pub rank: Option<u32>,
    #[arg(long, global = true)]
    pub hurst: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate sample paths and write a path file with a manifest.
    Simulate(commands::SimulateArgs),
    /// Compute c̃, c_{N,H}, tilde_l2_exact and breve_l2_bound.
    Constants(commands::ConstantsArgs),
    /// Run decomposition ensembles and independence diagnostics.
    Decompose(commands::DecomposeArgs),
    /// Oscillation scans and Hölder-exponent estimates over a path file.
    Oscillate(commands::OscillateArgs),
    /// Tail-shape fit, small-ball estimate and n₀ selection.
    Tails(commands::TailsArgs),
    /// Admissibility diagnostics for a scale function.
    CheckS(commands::CheckSArgs),
    /// Merge earlier summaries into one pass/fail report.
    Report(report::ReportArgs),
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: EXIT_CONFIG, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParams(_)
            | Error::InvalidInterval { .. }
            | Error::Config(_)
            | Error::BudgetExceeded { .. }
            | Error::BelowThreshold(_)
            | Error::EmptyIndexSet { .. }
            | Error::OutOfRange(_)
            | Error::GridMismatch(_)
            | Error::NonMonotone(_)
            | Error::InsufficientSample { .. } => EXIT_CONFIG,
            Error::ToleranceNotReached { .. } | Error::Divergent(_) => EXIT_TOLERANCE,
            Error::MissingInput(_) => EXIT_MISSING_INPUT,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn init_threads() -> Result<usize, Failure> {
    let default = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let n = match std::env::var("HERMITE_LAB_THREADS") {
        Ok(v) => {
            let cap: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Failure::config(format!("HERMITE_LAB_THREADS={v:?} is not a positive integer")))?;
            cap
        }
        Err(_) => default,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(e.to_string()))?;
    Ok(n)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let workers = init_threads()?;
    match cli.command {
        Command::Simulate(a) => commands::simulate(a, workers),
        Command::Constants(a) => commands::constants(a, workers),
        Command::Decompose(a) => commands::decompose(a, workers),
        Command::Oscillate(a) => commands::oscillate(a, workers),
        Command::Tails(a) => commands::tails(a, workers),
        Command::CheckS(a) => commands::check_s(a, workers),
        Command::Report(a) => report::report(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
