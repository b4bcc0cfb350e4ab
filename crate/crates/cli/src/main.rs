//! `srnn`: generate datasets, train the stochastic reservoir classifier and
//! run the accuracy, bound and robustness experiments from a TOML config.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Experiment;
use crate::config::{Config, Overrides};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "srnn", version, about = "Stochastic linear RNN path classification")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true, default_value = "srnn.toml")]
    config: PathBuf,
    /// Output directory; overrides `experiment.out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Stochastic trials per accuracy point; overrides `experiment.trials`.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Overrides `train.seed` and `experiment.sim_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the configured dataset to `dataset.csv`.
    Generate,
    /// Train on the training split; writes `model.json` and `trace.csv`.
    Train {
        /// Minimise the risk of the signature-truncated means of this order.
        #[arg(long, value_name = "N")]
        truncated: Option<usize>,
    },
    /// Test accuracy against training-set size.
    Evaluate,
    /// Generalisation gap against the PAC bound per training size.
    BoundCheck,
    /// Test accuracy under flipped training labels.
    Robustness,
    /// Monte-Carlo terminal states of the SDE driven by one test path.
    SimulateSde {
        /// Trained model; defaults to `model.json` in the output directory.
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = Config::load(&cli.config)?;
    cfg.apply(&Overrides {
        out: cli.out,
        trials: cli.trials,
        seed: cli.seed,
    });
    match cli.command {
        Command::Generate => commands::generate(&cfg),
        Command::Train { truncated } => commands::train(&cfg, truncated),
        Command::Evaluate => commands::experiment(&cfg, Experiment::Accuracy),
        Command::BoundCheck => commands::experiment(&cfg, Experiment::Bound),
        Command::Robustness => commands::experiment(&cfg, Experiment::Robustness),
        Command::SimulateSde { model } => {
            let model = model.unwrap_or_else(|| cfg.experiment.out_dir.join("model.json"));
            commands::simulate(&cfg, &model)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("srnn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
