//! Command-line front end for the max-id spatial extremes library.
//!
//! Every command reads a JSON run configuration (see [`config::RunConfig`])
//! and writes deterministic CSV/JSON outputs to `output_dir`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{Loaded, RunConfig};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "maxid", version, about = "Max-id spatial models for block maxima")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (overrides `threads`).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate replicates of a max-id or copula field.
    Simulate(commands::simulate::SimulateArgs),
    /// Fit GEV margins by independence likelihood and write uniform scores.
    FitMargins(CommonOnly),
    /// Map data between raw and uniform scales with fitted margins.
    Transform(CommonOnly),
    /// Fit a dependence model by pairwise likelihood.
    FitDependence(CommonOnly),
    /// Parametric bootstrap intervals for a dependence fit.
    Bootstrap(CommonOnly),
    /// Leave-one-station-out cross-validated log score ranking.
    Cv(CommonOnly),
    /// Dependence summaries, effective ranges and return periods.
    Diagnostics(commands::diagnostics::DiagnosticsArgs),
}

#[derive(Debug, Args)]
pub struct CommonOnly {
    #[command(flatten)]
    pub common: Common,
}

/// Loads the configuration named in `common` and applies the overrides.
pub fn load(common: &Common) -> CliResult<Loaded> {
    let mut loaded = match &common.config {
        Some(p) => Loaded::from_file(p)?,
        None => Loaded::from_config(RunConfig { schema_version: config::SCHEMA_VERSION, ..Default::default() }),
    };
    if let Some(out) = &common.out {
        loaded.config.output_dir = Some(std::env::current_dir()?.join(out));
    }
    if let Some(t) = common.threads {
        loaded.config.threads = Some(t);
    }
    Ok(loaded)
}

fn init_threads(loaded: &Loaded) -> CliResult<()> {
    if let Some(t) = loaded.config.threads {
        if t == 0 {
            return loaded.err("threads", "threads must be at least 1");
        }
        // A second initialisation (tests running several commands) is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<()> {
    let common = match &cli.command {
        Command::Simulate(a) => &a.common,
        Command::Diagnostics(a) => &a.common,
        Command::FitMargins(a)
        | Command::Transform(a)
        | Command::FitDependence(a)
        | Command::Bootstrap(a)
        | Command::Cv(a) => &a.common,
    };
    let loaded = load(common)?;
    init_threads(&loaded)?;
    match &cli.command {
        Command::Simulate(a) => commands::simulate::run(&loaded, a),
        Command::FitMargins(_) => commands::margins::fit(&loaded),
        Command::Transform(_) => commands::margins::transform(&loaded),
        Command::FitDependence(_) => commands::dependence::fit(&loaded),
        Command::Bootstrap(_) => commands::dependence::bootstrap(&loaded),
        Command::Cv(_) => commands::dependence::cv(&loaded),
        Command::Diagnostics(a) => commands::diagnostics::run(&loaded, a),
    }
}
