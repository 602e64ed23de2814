mod commands;
mod manifest;
mod options;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use manifest::Recorder;
use options::{Bench, Common, ConfigFile, Ensemble, Layer, Penalty, Prediction, Simulation, Training};

#[derive(Parser)]
#[command(name = "rlasso", version, about = "Random lasso and penalized regression on CSV data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw training and validation sets from a simulation example
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: Simulation,
    },
    /// Fit one estimator and write its coefficients
    Fit {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        training: Training,
        #[command(flatten)]
        penalty: Penalty,
        #[command(flatten)]
        ensemble: Ensemble,
    },
    /// Predict responses from a coefficient file
    Predict {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        prediction: Prediction,
    },
    /// Choose the random lasso subset sizes over a grid
    Tune {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        training: Training,
        #[command(flatten)]
        ensemble: Ensemble,
    },
    /// Compare all methods over replicated simulations
    Benchmark {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: Simulation,
        #[command(flatten)]
        ensemble: Ensemble,
        #[command(flatten)]
        bench: Bench,
    },
}

/// Resolves the seed and thread pool; returns the completed common group.
fn prepare(mut common: Common) -> Result<Common> {
    let seed = common.seed.unwrap_or_else(rand::random);
    common.seed = Some(seed);
    if let Some(k) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(common)
}

fn run(cli: Cli) -> Result<()> {
    let start = Instant::now();
    match cli.command {
        Command::Simulate { config, common, sim } => {
            let file = ConfigFile::load(config.as_deref())?;
            file.check_keys(&[Common::keys(), Simulation::keys()])?;
            let common = prepare(file.layer(common)?)?;
            let seed = common.seed.expect("seed resolved");
            commands::simulate(common, file.layer(sim)?, seed, Recorder::new("simulate", seed, start))
        }
        Command::Fit { config, common, training, penalty, ensemble } => {
            let file = ConfigFile::load(config.as_deref())?;
            file.check_keys(&[Common::keys(), Training::keys(), Penalty::keys(), Ensemble::keys()])?;
            let common = prepare(file.layer(common)?)?;
            let seed = common.seed.expect("seed resolved");
            let (training, penalty, ensemble) = (file.layer(training)?, file.layer(penalty)?, file.layer(ensemble)?);
            commands::fit(common, training, penalty, ensemble, seed, Recorder::new("fit", seed, start))
        }
        Command::Predict { config, common, prediction } => {
            let file = ConfigFile::load(config.as_deref())?;
            file.check_keys(&[Common::keys(), Prediction::keys()])?;
            let common = prepare(file.layer(common)?)?;
            let seed = common.seed.expect("seed resolved");
            commands::predict_cmd(common, file.layer(prediction)?, Recorder::new("predict", seed, start))
        }
        Command::Tune { config, common, training, ensemble } => {
            let file = ConfigFile::load(config.as_deref())?;
            file.check_keys(&[Common::keys(), Training::keys(), Ensemble::keys()])?;
            let common = prepare(file.layer(common)?)?;
            let seed = common.seed.expect("seed resolved");
            let (training, ensemble) = (file.layer(training)?, file.layer(ensemble)?);
            commands::tune(common, training, ensemble, seed, Recorder::new("tune", seed, start))
        }
        Command::Benchmark { config, common, sim, ensemble, bench } => {
            let file = ConfigFile::load(config.as_deref())?;
            file.check_keys(&[Common::keys(), Simulation::keys(), Ensemble::keys(), Bench::keys()])?;
            let common = prepare(file.layer(common)?)?;
            let seed = common.seed.expect("seed resolved");
            let (sim, ensemble, bench) = (file.layer(sim)?, file.layer(ensemble)?, file.layer(bench)?);
            commands::benchmark(common, sim, ensemble, bench, seed, Recorder::new("benchmark", seed, start))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = format!("{e:#}").replace(['\n', '\r'], " ");
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
