//! Benchmark front end: dataset inspection, feature export, detector
//! training and scoring, synthetic data generation, and the cross-model
//! comparison.
//!
//! Exit status: 0 on success, 1 when a detector failed to train or
//! evaluate, 2 for input and format problems.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hydromon::dataset::load_dataset;
use hydromon::error::{Error, Result};

use commands::Context;
use config::{load_config, parse_models, RunConfig};

#[derive(Parser)]
#[command(name = "hydromon", version, about = "Hydraulic condition-monitoring benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the configuration's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides the configuration's `seed`. Capped at
    /// the signed-64-bit maximum so it can be echoed into TOML headers.
    #[arg(long, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print dataset schema, condition tallies, and label balance.
    Inspect {
        /// Dataset directory (17 sensor files plus profile.txt);
        /// defaults to the configuration's data source.
        dir: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write the feature table, per-attribute histograms, and the
    /// attribute correlation matrix.
    Features {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit and calibrate one detector; save it as a model file.
    Train {
        /// The detector to train (robust-cov, lof, ocsvm, iforest,
        /// dae, or helm).
        #[arg(long)]
        models: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Score a saved model on the configured test split.
    Score {
        /// Path to a model file written by `train`.
        model_path: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the configured detectors on one split and write the
    /// comparison table, confusion counts, ratios, and score files.
    Compare {
        /// Comma-separated subset of detectors to run.
        #[arg(long)]
        models: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate the configured synthetic dataset as real-schema files.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Training(_) => 1,
                _ => 2,
            })
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Inspect { dir, common } => {
            let data = match (&dir, &common.config) {
                (Some(path), _) => load_dataset(path)?,
                (None, Some(_)) => context(common, false)?.config.load_data()?,
                (None, None) => {
                    return Err(Error::argument(
                        "give a dataset directory or a --config with a data source",
                    ))
                }
            };
            print!("{}", commands::inspect_report(&data)?);
            Ok(0)
        }
        Command::Features { common } => {
            commands::features(&context(common, true)?)?;
            Ok(0)
        }
        Command::Train { models, common } => {
            let kinds = parse_models(&models)?;
            let [kind] = kinds[..] else {
                return Err(Error::argument("train takes exactly one model"));
            };
            commands::train(&context(common, true)?, kind)?;
            Ok(0)
        }
        Command::Score { model_path, common } => {
            commands::score(&context(common, true)?, &model_path)?;
            Ok(0)
        }
        Command::Compare { models, common } => {
            let kinds = models.as_deref().map(parse_models).transpose()?;
            let all_succeeded = commands::compare(&context(common, true)?, kinds.as_deref())?;
            Ok(if all_succeeded { 0 } else { 1 })
        }
        Command::Synth { common } => {
            commands::synth(&context(common, false)?)?;
            Ok(0)
        }
    }
}

/// Resolves flags against the configuration file. Commands that need a
/// full configuration require the file; the rest fall back to defaults
/// built on the (then mandatory) --seed.
fn context(common: CommonArgs, config_required: bool) -> Result<Context> {
    let mut config = match &common.config {
        Some(path) => load_config(path)?,
        None if config_required => {
            return Err(Error::argument("this command needs a --config file"))
        }
        None => {
            let seed = common.seed.ok_or_else(|| {
                Error::argument("without a --config file a --seed is required")
            })?;
            RunConfig::with_seed(seed)
        }
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let out = common
        .out
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    config.out = Some(out.clone());
    Ok(Context { config, out })
}
