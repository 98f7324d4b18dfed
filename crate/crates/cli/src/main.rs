//! Batch front end: region and gap tables, time-sharing envelopes, root
//! report and end-to-end scheme simulation, all written as CSV.
//!
//! Exit codes: 0 success, 2 an invariant failed, 3 invalid configuration or
//! usage, 1 any other error such as an unwritable output directory.

mod config;
mod simulate;
mod table;
mod tables;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, SweepConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Invariant(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "invalid configuration: {m}"),
            Self::Invariant(m) => write!(f, "invariant violated: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Parser)]
#[command(name = "dirty-mac", version, about = "Rate bounds and lattice scheme simulation for dirty multiple-access channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat TOML sweep configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Samples per simulated stage.
    #[arg(long, global = true)]
    samples: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Inner and outer rate regions per channel and power point.
    Regions,
    /// Sum-rate bounds and gaps over an SNR sweep.
    Gaps,
    /// Simulate presets and check their invariants.
    Simulate,
    /// Solve the root equations and report the slope comparison.
    Roots,
    /// Time-sharing envelope of a rate curve.
    Envelope,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Command::Roots = cli.command {
        return tables::roots(cli.out.as_deref());
    }
    let over = Overrides { seed: cli.seed, out: cli.out, samples: cli.samples };
    let cfg = SweepConfig::load(cli.config.as_deref(), &over)?;
    match cli.command {
        Command::Regions => tables::regions(&cfg),
        Command::Gaps => tables::gaps(&cfg),
        Command::Simulate => simulate::simulate(&cfg),
        Command::Envelope => tables::envelope(&cfg),
        Command::Roots => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // clap uses 2 for usage errors, which is reserved for invariant
            // failures here.
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<CliError>() {
        Some(CliError::Invariant(_)) => 2,
        Some(CliError::Config(_)) => 3,
        None => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_documented_exit_codes() {
        assert_eq!(exit_code(&CliError::Invariant("x".into()).into()), 2);
        assert_eq!(exit_code(&CliError::Config("x".into()).into()), 3);
        assert_eq!(exit_code(&anyhow::anyhow!("io")), 1);
    }
}
