use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use opa_core::error::{Error, ExitStatus};
use opa_core::{Command, Pipeline, RunConfig};

/// Squeezed-light modes of a pulsed single-pass parametric amplifier.
#[derive(Parser)]
#[command(name = "opa", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Phase-matching angle, dispersion coefficients and wavevector tables.
    Dispersion(Io),
    /// Green pairs (C, S) and their symplectic residuals.
    Greens(Io),
    /// Bloch-Messiah squeezing parameters, mode shapes and widths.
    Modes(Io),
    /// Analytic Gaussian-model parameters against the numerical spectrum.
    Gaussian(Io),
    /// Homodyne detection sweeps over local-oscillator duration.
    Homodyne(Io),
    /// Every command in sequence, sharing propagation results.
    All(Io),
}

#[derive(Args)]
struct Io {
    /// JSON run configuration; the reference run is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<(), Error> {
    let (command, io) = match cli.verb {
        Verb::Dispersion(io) => (Command::Dispersion, io),
        Verb::Greens(io) => (Command::Greens, io),
        Verb::Modes(io) => (Command::Modes, io),
        Verb::Gaussian(io) => (Command::Gaussian, io),
        Verb::Homodyne(io) => (Command::Homodyne, io),
        Verb::All(io) => (Command::All, io),
    };
    if let Ok(threads) = std::env::var("OPA_THREADS") {
        let threads: usize = threads
            .parse()
            .map_err(|_| Error::Config(format!("OPA_THREADS must be a positive integer, got {threads:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let config = match &io.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    Pipeline::new(config, &io.out)?.run(command)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::from(ExitStatus::Ok as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_status() as u8)
        }
    }
}
