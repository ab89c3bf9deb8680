//! `scatterlab`: reproducible experiments on point scatterers in flat tori.

mod cache;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use config::{RunConfig, Settings};
use error::CliError;

#[derive(Parser)]
#[command(version, about, long_about = None)]
struct Cli {
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Distinct norms and multiplicities up to --xmax.
    Norms,
    /// New eigenvalues for every interval up to --xmax.
    Solve,
    /// Spacing statistics of norms, eigenvalues, a file or a synthetic sample.
    Stats,
    /// Position matrix elements of eigenstates spread up to --xmax.
    Equidist,
    /// Named numerical checks with measured values and verdicts.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Norms => "norms",
            Command::Solve => "solve",
            Command::Stats => "stats",
            Command::Equidist => "equidist",
            Command::Verify => "verify",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let settings = match &cli.config {
        Some(path) => cli.settings.over(Settings::load(path)?),
        None => cli.settings,
    };
    let cfg = RunConfig::resolve(cli.command.name(), &settings)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Norms => commands::norms(&cfg),
        Command::Solve => commands::solve_cmd(&cfg),
        Command::Stats => commands::stats(&cfg),
        Command::Equidist => commands::equidist(&cfg),
        Command::Verify => commands::verify(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
