//! `coagfrag`: run simulations, ensembles, drift audits and validations from a
//! JSON configuration.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::commands::Settings;
use crate::config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{0}")]
    Model(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<coagfrag::Error> for CliError {
    fn from(e: coagfrag::Error) -> Self {
        match e {
            coagfrag::Error::Usage(m) => CliError::Usage(m),
            other => CliError::Model(other.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Model(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "coagfrag", version, about = "Stochastic coagulation-fragmentation jump processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; overrides `ensemble.base_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `ensemble.replicates`.
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// 0: verdicts, 1: per-replicate rows, 2: full event logs.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(0..=2))]
    verbosity: Option<u8>,
    /// Worker threads for ensembles; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one trajectory and classify it.
    Simulate,
    /// Simulate seeded replicates and aggregate their verdicts.
    Ensemble,
    /// Evaluate the drift of a test function at the configured states.
    Drift,
    /// Run a named check against its reference value.
    Validate {
        name: Option<String>,
        /// List the available checks.
        #[arg(long)]
        list: bool,
    },
}

impl Cli {
    fn settings(&self) -> Result<Settings, CliError> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| CliError::Usage("--config is required for this command".into()))?;
        let mut cfg = RunConfig::load(path)?;
        if let Some(seed) = self.seed {
            cfg.ensemble.base_seed = seed;
        }
        if let Some(r) = self.replicates {
            if r == 0 {
                return Err(CliError::Usage("--replicates must be at least 1".into()));
            }
            cfg.ensemble.replicates = r;
        }
        if let Some(w) = self.workers {
            cfg.ensemble.workers = w;
        }
        if let Some(v) = self.verbosity {
            cfg.output.verbosity = v;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = Some(out.display().to_string());
        }
        let out = cfg.output.dir.as_ref().map(PathBuf::from);
        Ok(Settings { cfg, out })
    }

    fn run(&self) -> Result<bool, CliError> {
        match &self.command {
            Command::Simulate => commands::simulate(&self.settings()?).map(|_| true),
            Command::Ensemble => commands::ensemble(&self.settings()?).map(|_| true),
            Command::Drift => commands::drift_audit(&self.settings()?).map(|_| true),
            Command::Validate { name, list } => {
                let (cfg_name, out) = match &self.config {
                    Some(path) => {
                        let cfg = RunConfig::load(path)?;
                        (cfg.validation.clone(), cfg.output.dir.map(PathBuf::from))
                    }
                    None => (None, None),
                };
                let name = name.clone().or(cfg_name);
                let out = self.out.clone().or(out);
                commands::validate(name.as_deref(), *list, self.seed, self.replicates, self.workers.unwrap_or(0), out.as_deref())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("coagfrag: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
