//! Command-line front end: configuration, run orchestration and file output
//! for the `isac-core` evaluation library.

pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use config::{load_config, parse_config, ConfigError, Overrides, RunConfig, ScenarioChoice};
pub use run::{run, RunError, Subcommand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Classified PEB map of the test region.
    Heatmap,
    /// Empirical CDF of the per-cell error.
    Cdf,
    /// Processing-node latency versus computational load.
    LatencySweep,
    /// Range-ambiguity sidelobe floor with and without the PA.
    PaRaf,
    /// Range error versus LO-delay mismatch under phase noise.
    PnSweep,
    /// Range, velocity and angular resolution of the preset.
    Resolution,
    /// Propagation paths of the scene's sensing pair.
    Paths,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Heatmap => Subcommand::Heatmap,
            Command::Cdf => Subcommand::Cdf,
            Command::LatencySweep => Subcommand::LatencySweep,
            Command::PaRaf => Subcommand::PaRaf,
            Command::PnSweep => Subcommand::PnSweep,
            Command::Resolution => Subcommand::Resolution,
            Command::Paths => Subcommand::Paths,
        }
    }
}

/// Evaluate sensing performance, latency and hardware impairments.
#[derive(Debug, Parser)]
#[command(name = "isac-eval", version)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set scene.rcs_m2=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub preset: Option<String>,
    /// Grid as `NXxNY`.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            set: self.set.clone(),
            scenario: self.scenario.clone(),
            preset: self.preset.clone(),
            grid: self.grid.clone(),
            workers: self.workers,
            seed: self.seed,
        }
    }
}

/// Loads the configuration and runs the command; returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let result = load_config(cli.config.as_deref(), &cli.overrides())
        .map_err(RunError::from)
        .and_then(|cfg| run(cli.command.into(), &cfg, &cli.out));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
