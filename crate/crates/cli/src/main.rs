//! `injlock`: run injection-locking simulations from a config file.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 numerical
//! or I/O failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use injlock_core::{EquationVariant, Error};

#[derive(Parser, Debug)]
#[command(name = "injlock", version, about = "Injection locking of a mean-field Rydberg time crystal")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (sectioned key = value file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Equation variant; overrides `[model] variant`.
    #[arg(long, global = true)]
    variant: Option<EquationVariant>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Integrate one trajectory with the configured drive.
    Simulate,
    /// Probe a fixed injection frequency over the field or strength axis.
    SweepField,
    /// Probe the injection-frequency axis at fixed strength.
    SweepFrequency,
    /// Switch the injection on mid-run and measure the acquisition time.
    StepOn,
    /// Critical strength at each offset and the fitted forcing constant K.
    CriticalPoints,
    /// Lock bandwidth from field sweeps by the pulled-line intercept.
    FitBandwidth,
    /// Field-to-Rabi calibration chain.
    Calibrate,
    /// Classify a parameter grid and pick the oscillating point nearest the target.
    ScanOsc,
}

fn run(cli: Cli) -> Result<(), Error> {
    let path = cli.config.ok_or_else(|| Error::Config { line: 0, msg: "--config is required".into() })?;
    let mut cfg = injlock_core::RunConfig::from_path(&path).map_err(|e| match e {
        Error::Io { .. } => Error::Config { line: 0, msg: e.to_string() },
        other => other,
    })?;
    if let Some(v) = cli.variant {
        cfg.model.variant = v;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config { line: 0, msg: "--threads must be >= 1".into() });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config { line: 0, msg: format!("thread pool: {e}") })?;
    }
    let out_dir = cli.out_dir.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    commands::Ctx { cfg, out_dir }.dispatch(cli.command)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
