//! qsbd: quake SAR building-damage toolkit.
//!
//! One binary exposing the full workflow: synthetic scene generation,
//! dataset construction, training, evaluation, stratified cross-validation,
//! leave-one-city-out runs, and per-building prediction export. Results go
//! to files; logs go to stderr. Every run writes a `run.json` with the
//! resolved configuration and input-file content hashes.

mod cli_error;
mod commands;
mod recipe;

use clap::{Parser, Subcommand};


#[derive(Parser)]
#[command(name = "qsbd", version, about = "SAR building-damage detection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-city earthquake campaign.
    SynthGen(commands::synth::SynthGenArgs),
    /// Build the labeled patch dataset from a campaign directory.
    BuildDataset(commands::dataset::BuildDatasetArgs),
    /// Train a fusion model on a dataset store.
    Train(commands::train::TrainArgs),
    /// Evaluate a checkpoint on a dataset store.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Stratified k-fold cross-validation (train + evaluate per fold).
    CrossValidate(commands::cross_validate::CrossValidateArgs),
    /// Leave-one-city-out evaluation.
    Loco(commands::loco::LocoArgs),
    /// Score a footprint layer and write a prediction GeoJSON.
    Predict(commands::predict::PredictArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SynthGen(args) => commands::synth::run(args),
        Command::BuildDataset(args) => commands::dataset::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::CrossValidate(args) => commands::cross_validate::run(args),
        Command::Loco(args) => commands::loco::run(args),
        Command::Predict(args) => commands::predict::run(args),
    };
    if let Err(e) = result {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}
