//! Command-line front end.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Mismatch(String),
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Mismatch(_) => 3,
            CliError::NotConverged(_) => 4,
        }
    }
}

impl From<ppstat::Error> for CliError {
    fn from(e: ppstat::Error) -> Self {
        use ppstat::Error as E;
        match e {
            E::InvalidInput(_) | E::Undefined(_) => CliError::Input(e.to_string()),
            E::Mismatch(_) | E::Infeasible(_) => CliError::Mismatch(e.to_string()),
            E::NotConverged(_) => CliError::NotConverged(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ppstat", version, about = "Photon-number statistics of photon-pair sources")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides repetitions (simulate, sweep) or bootstrap samples.
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct WithCounts {
    #[command(flatten)]
    pub common: Common,
    /// Count log, `nu,n_m,f11..f44` or `nu,n_m,f1..f4`.
    #[arg(long)]
    pub counts: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mode numbers, filter segmentation and the synthesized PND of a JSD.
    Jsd(Common),
    /// Simulated count logs for a configured source and detector setup.
    Simulate(Common),
    /// RMSLE sweep over source and detector parameters.
    Sweep(Common),
    /// PND reconstruction and characteristics from a count log.
    Estimate(WithCounts),
    /// Bootstrap uncertainties of the characteristics.
    Bootstrap(WithCounts),
}

fn setup(c: &Common) -> Result<(RunConfig, PathBuf, u64), CliError> {
    let cfg = RunConfig::load(&c.config)?;
    let out = commands::out_dir(&cfg, c.out.clone())?;
    let seed = c.seed.or(cfg.seed).unwrap_or(0);
    Ok((cfg, out, seed))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Jsd(c) => {
            let (cfg, out, _) = setup(&c)?;
            commands::cmd_jsd(&cfg, &out)
        }
        Command::Simulate(c) => {
            let (cfg, out, seed) = setup(&c)?;
            commands::cmd_simulate(&cfg, &out, seed, c.reps)
        }
        Command::Sweep(c) => {
            let (cfg, out, seed) = setup(&c)?;
            commands::cmd_sweep(&cfg, &out, seed, c.reps)
        }
        Command::Estimate(w) => {
            let (cfg, out, seed) = setup(&w.common)?;
            commands::cmd_estimate(&cfg, &out, seed, &w.counts, w.common.reps)
        }
        Command::Bootstrap(w) => {
            let (cfg, out, seed) = setup(&w.common)?;
            commands::cmd_bootstrap(&cfg, &out, seed, &w.counts, w.common.reps)
        }
    }
}
