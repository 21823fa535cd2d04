//! `elastic-mono`: batch driver for forward synthesis, monotonicity
//! reconstruction, identity validation and localized potentials.
//!
//! Exit codes: 0 ok, 2 config error, 3 solver error, 4 validation failure.

mod config;
mod manifest;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use manifest::RunManifest;
use run::Failure;

#[derive(Parser)]
#[command(name = "elastic-mono", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write far field operator CSVs for every ladder rung.
    Forward(Args),
    /// Sweep test balls and write the indicator map.
    Recon(Args),
    /// Check unitarity, the energy and main identities and spectra coincidence.
    Validate(Args),
    /// Compute a localized potentials curve.
    Localize(Args),
}

#[derive(clap::Args)]
struct Args {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for the parallel sweeps.
    #[arg(long)]
    threads: Option<usize>,
    /// Override the direction-grid ladder, e.g. "32,64,128".
    #[arg(long, value_delimiter = ',')]
    n_ladder: Option<Vec<usize>>,
}

type Runner = fn(&ExperimentConfig, &Path, &mut RunManifest) -> Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args, run): (&str, Args, Runner) = match cli.command {
        Command::Forward(a) => ("forward", a, run::forward),
        Command::Recon(a) => ("recon", a, run::recon),
        Command::Validate(a) => ("validate", a, run::validate),
        Command::Localize(a) => ("localize", a, run::localize),
    };
    match execute(name, &args, run) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn execute(name: &str, args: &Args, run: Runner) -> Result<(), Failure> {
    if let Some(k) = args.threads {
        if k == 0 {
            return Err(Failure::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    let (mut cfg, bytes) = ExperimentConfig::load(&args.config).map_err(Failure::Config)?;
    if let Some(l) = &args.n_ladder {
        cfg.ladder = l.clone();
    }
    cfg.validate().map_err(Failure::Config)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::Config(format!("cannot create {}: {e}", args.out.display())))?;
    let mut manifest = RunManifest::start(name, &bytes, &args.out, &cfg.ladder, cfg.seed)
        .map_err(|e| Failure::Solver(format!("cannot write manifest: {e}")))?;
    let result = run(&cfg, &args.out, &mut manifest);
    manifest.status = match &result {
        Ok(()) => "ok",
        Err(Failure::Config(_)) => "config_error",
        Err(Failure::Solver(_)) => "solver_error",
        Err(Failure::Validation(_)) => "validation_failed",
    }
    .to_string();
    manifest.error = result.as_ref().err().map(|f| f.message().to_string());
    manifest
        .write()
        .map_err(|e| Failure::Solver(format!("cannot write manifest: {e}")))?;
    result
}
