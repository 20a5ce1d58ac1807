//! Command-line frontend for `bottleneck-core`.
//!
//! Every command reads one JSON spec file (see [`spec`]), prints a summary
//! (or a JSON dump with `--json`) and optionally writes CSV with `--out`.
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 a solver failed
//! to converge.

pub mod commands;
pub mod format;
pub mod spec;

use std::path::PathBuf;

use bottleneck_core::Error;
use clap::{Parser, ValueEnum};

/// Environment variable consulted for the seed when `--seed` is absent.
pub const SEED_ENV: &str = "BOTTLENECK_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    IbCapacity,
    RemoteRd,
    LmRate,
    GmiRate,
    RelayMismatch,
    RelayDecoderMismatch,
    Compound,
    SiDecoder,
    LmP2p,
    Fading,
    Sweep,
    Simulate,
}

impl Command {
    pub fn name(&self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

#[derive(Debug, Parser)]
#[command(name = "bottleneck", version, about = "Achievable rates and simulations for the oblivious-relay channel")]
pub struct Cli {
    pub command: Command,
    /// JSON spec file.
    pub spec: PathBuf,
    /// Write results as CSV to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for restarts and simulation; overrides BOTTLENECK_SEED and the spec.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report rates in nats instead of bits.
    #[arg(long)]
    pub nats: bool,
    /// Random restarts per inner solve.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Print a JSON dump (canonical spec, defaults, full results) instead of the summary.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("malformed spec: {0}")]
    Parse(String),
    #[error("invalid spec at `{key}`: {rule}")]
    Validation { key: String, rule: String },
    #[error(transparent)]
    Solver(#[from] Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Solver(Error::NonConvergence { .. }) => 3,
            _ => 2,
        }
    }
}

/// Runs a parsed invocation and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let env_seed = match std::env::var(SEED_ENV) {
        Ok(v) if cli.seed.is_none() => match v.trim().parse::<u64>() {
            Ok(s) => Some(s),
            Err(_) => {
                eprintln!("error: {SEED_ENV}={v:?} is not a nonnegative integer");
                return 2;
            }
        },
        _ => None,
    };
    match commands::execute(cli, env_seed) {
        Ok(report) => {
            let text = if cli.json {
                serde_json::to_string_pretty(&report.json).expect("json values serialize") + "\n"
            } else {
                report.summary()
            };
            print!("{text}");
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, report.csv()) {
                    eprintln!("error: writing {}: {e}", path.display());
                    return 1;
                }
            }
            if report.converged {
                0
            } else {
                eprintln!("warning: solver did not converge; see diagnostics");
                3
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
