//! `fgscan`: simulate, fit, select, and predict for two-cause competing
//! risks models, with machine-readable JSON reports and CSV/SVG outputs.

mod cmd_bench;
mod cmd_cif;
mod cmd_fit;
mod cmd_penfit;
mod cmd_simulate;
mod report;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fgscan_core::Error as CoreError;

pub const ALGORITHM_NOTES: &str = include_str!("../../../docs/algorithm-notes.md");

pub fn notes_hash() -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(ALGORITHM_NOTES.as_bytes());
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

fn version_string() -> String {
    format!("{}+notes.{}", env!("CARGO_PKG_VERSION"), notes_hash())
}

#[derive(Parser)]
#[command(
    name = "fgscan",
    version = version_string(),
    about = "Fine-Gray competing-risks regression with linear-time scans"
)]
struct Cli {
    /// Worker threads for bootstrap replicates and benchmarking; never
    /// changes results, only wall time.
    #[arg(long, global = true, env = "FGSCAN_JOBS", default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a two-cause competing-risks dataset
    Simulate(cmd_simulate::Args),
    /// Fit the unpenalized model, optionally with bootstrap variance
    Fit(cmd_fit::Args),
    /// Fit a penalized path over a lambda grid with BIC selection
    Penfit(cmd_penfit::Args),
    /// Predict cumulative incidence with bootstrap intervals and bands
    Cif(cmd_cif::Args),
    /// Time the scan engine against the quadratic reference engine
    Bench(cmd_bench::Args),
}

/// Exit-code contract: 0 ok, 1 input/file, 2 usage, 3 model/numerical.
pub fn exit_code_for(err: &CoreError) -> u8 {
    match err {
        CoreError::Io { .. } | CoreError::Parse { .. } => 1,
        CoreError::InvalidArgument(_) => 2,
        _ => 3,
    }
}

pub type CmdResult = Result<(), CoreError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli.jobs.max(1);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("fgscan: cannot build worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = pool.install(|| match &cli.command {
        Command::Simulate(args) => cmd_simulate::run(args, jobs),
        Command::Fit(args) => cmd_fit::run(args, jobs),
        Command::Penfit(args) => cmd_penfit::run(args, jobs),
        Command::Cif(args) => cmd_cif::run(args, jobs),
        Command::Bench(args) => cmd_bench::run(args, jobs),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("fgscan: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// Parse a coefficient vector: either a comma-separated list or `@path`
/// pointing at a file of comma/whitespace-separated numbers.
pub fn parse_vector(text: &str) -> Result<Vec<f64>, CoreError> {
    let body;
    if let Some(path) = text.strip_prefix('@') {
        body = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
    } else {
        body = text.to_string();
    }
    let mut values = Vec::new();
    for token in body.split(|c: char| c == ',' || c.is_whitespace()) {
        if token.is_empty() {
            continue;
        }
        let v: f64 = token.parse().map_err(|_| {
            CoreError::InvalidArgument(format!("cannot parse '{token}' as a number"))
        })?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(CoreError::InvalidArgument(format!(
            "no numbers found in '{text}'"
        )));
    }
    Ok(values)
}

/// Parse a `count:min:max` grid specification into a descending log grid.
pub fn parse_lambda_grid(text: &str) -> Result<Vec<f64>, CoreError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CoreError::InvalidArgument(format!(
            "lambda grid must be count:min:max, got '{text}'"
        )));
    }
    let count: usize = parts[0].parse().map_err(|_| {
        CoreError::InvalidArgument(format!("bad grid count '{}'", parts[0]))
    })?;
    let min: f64 = parts[1].parse().map_err(|_| {
        CoreError::InvalidArgument(format!("bad grid minimum '{}'", parts[1]))
    })?;
    let max: f64 = parts[2].parse().map_err(|_| {
        CoreError::InvalidArgument(format!("bad grid maximum '{}'", parts[2]))
    })?;
    fgscan_core::penfit::log_lambda_grid(count, min, max)
}
