//! Command-line front end: argument parsing, config resolution and exit codes.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::Error;
use config::{read_config_file, Options, RunConfig};
use output::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NON_CONVERGENCE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numeric(#[from] Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(Error::RefinementFailure { .. }) => EXIT_NON_CONVERGENCE,
            _ => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "walkhull", version, about = "Facet, surface and volume statistics of random-walk convex hulls")]
pub struct Cli {
    /// Flat key/value TOML file; flags given on the command line override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Persistence probabilities p_n(r) and bridge persistence q_n(r).
    Persistence(Options),
    /// Probability that one facet spec spans a facet.
    FacetProb(Options),
    /// Expected facet count, origin facets, surface area and volume.
    Stats(Options),
    /// Monte Carlo estimates of hull statistics.
    Simulate(Options),
    /// Formulas side by side with Monte Carlo, with z-scores.
    Verify(Options),
    /// Hull of m iid Gaussian points.
    Polytope(Options),
    /// Closed forms for one walk.
    SingleWalk(Options),
}

impl Command {
    fn split(self) -> (&'static str, Options) {
        match self {
            Command::Persistence(o) => ("persistence", o),
            Command::FacetProb(o) => ("facet-prob", o),
            Command::Stats(o) => ("stats", o),
            Command::Simulate(o) => ("simulate", o),
            Command::Verify(o) => ("verify", o),
            Command::Polytope(o) => ("polytope", o),
            Command::SingleWalk(o) => ("single-walk", o),
        }
    }
}

/// Resolves flags against the config file.
pub fn resolve(cli: Cli) -> Result<RunConfig, CliError> {
    let (name, flags) = cli.command.split();
    let file = match &cli.config {
        Some(path) => read_config_file(path)?,
        None => Options::default(),
    };
    RunConfig::resolve(name, flags.or(file))
}

pub fn execute(cfg: &RunConfig) -> Result<Report, CliError> {
    #[cfg(feature = "parallel")]
    {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global();
    }
    match cfg.command.as_str() {
        "persistence" => commands::persistence(cfg),
        "facet-prob" => commands::facet_prob(cfg),
        "stats" => commands::stats(cfg),
        "simulate" => commands::simulate(cfg),
        "verify" => commands::verify(cfg),
        "polytope" => commands::polytope(cfg),
        "single-walk" => commands::single_walk(cfg),
        other => Err(CliError::Usage(format!("unknown command {other}"))),
    }
}

/// Parses `args`, runs the command, writes the report and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = resolve(cli).and_then(|cfg| {
        let report = execute(&cfg)?;
        report.emit()?;
        Ok(report)
    });
    match outcome {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            report.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
