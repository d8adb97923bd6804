//! Command-line front end for `nearfield-core`.
//!
//! Settings resolve in three layers: the preset (or the subcommand's default
//! preset), then the `--config` TOML file, then flags. Every output file gets
//! a `.meta.txt` sidecar echoing the run manifest.

pub mod channel_io;
pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Version of the CSV and binary layouts, recorded in every sidecar.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<nearfield_core::Error> for CliError {
    fn from(e: nearfield_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "nearfield",
    version,
    about = "Near-field LOS channel synthesis and wavefront estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a channel tensor and its metadata.
    Synth(CommonArgs),
    /// Fit a polynomial-phase model to a channel file or a noisy synthetic one.
    Estimate(EstimateArgs),
    /// Monte Carlo MSE sweep over SNR and model degree.
    Mse(CommonArgs),
    /// Multi-start maximum-likelihood trajectories.
    Mle(CommonArgs),
    /// Plain versus attenuation-profiled objective along the broadside axis.
    Landscape(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Flat TOML settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; must exist.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Named setup; see `presets` in the core crate.
    #[arg(long)]
    pub preset: Option<String>,
    /// Number of random starts for `mle`.
    #[arg(long)]
    pub starts: Option<usize>,
    /// Use the preset's full-size arrays and counts.
    #[arg(long)]
    pub full: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Channel file to fit; without it a noisy channel is synthesized.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Model degree `L`.
    #[arg(long)]
    pub degree: Option<usize>,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Synth(args) => commands::synth(args),
        Command::Estimate(args) => commands::estimate(args),
        Command::Mse(args) => commands::mse(args),
        Command::Mle(args) => commands::mle(args),
        Command::Landscape(args) => commands::landscape(args),
    }
}
