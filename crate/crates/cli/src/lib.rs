//! Command-line driver for GCCA / DGCCA experiments.
//!
//! Exit codes: 0 success, 2 config error, 3 data or I/O error, 4 numerical
//! divergence, 5 gradient-check failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "dgcca", version, about = "Deep generalized CCA: train, transform, evaluate")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the three-view synthetic mixture dataset
    Synth(commands::synth::SynthArgs),
    /// Train DGCCA networks from a config file
    Train(commands::train::TrainArgs),
    /// Embed a dataset with a trained model
    Transform(commands::transform::TransformArgs),
    /// Linear GCCA on a dataset
    Gcca(commands::gcca::GccaArgs),
    /// KNN or linear-probe accuracy of embeddings or raw views
    Eval(commands::eval::EvalArgs),
    /// Check the analytic GCCA gradient against finite differences
    Gradcheck(commands::gradcheck::GradcheckArgs),
    /// Build a dataset directory from CSV or MVMX view files
    Import(commands::convert::ImportArgs),
    /// Convert one matrix between CSV and MVMX
    Convert(commands::convert::ConvertArgs),
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Synth(a) => commands::synth::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Transform(a) => commands::transform::run(a),
        Command::Gcca(a) => commands::gcca::run(a),
        Command::Eval(a) => commands::eval::run(a),
        Command::Gradcheck(a) => commands::gradcheck::run(a),
        Command::Import(a) => commands::convert::run_import(a),
        Command::Convert(a) => commands::convert::run_convert(a),
    }
}
