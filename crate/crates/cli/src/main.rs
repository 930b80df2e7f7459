//! `mtd`: simulate, fit, forecast and check mixture transition
//! distribution models from JSON run configurations.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Overrides;
use crate::error::CliResult;

#[derive(Parser, Debug)]
#[command(name = "mtd", version, about = "Stationary mixture transition distribution models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct RunArgs {
    /// JSON run configuration, merged over the preset.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Built-in configuration to start from.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    /// Master seed; overrides the configuration.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,

    /// Input series CSV; overrides the configuration.
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,

    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a series from a model.
    Simulate(RunArgs),
    /// Fit a model by MCMC and write the draws and a summary.
    Fit(RunArgs),
    /// Posterior predictive paths and intervals from a previous fit.
    Predict(RunArgs),
    /// Randomized quantile residuals and a QQ table.
    Residuals(RunArgs),
    /// Autocorrelations and the weak-stationarity check of a model.
    Acf(RunArgs),
    /// Weight recovery over the simulation-study grid.
    ReproSim(RunArgs),
}

type Handler = fn(serde_json::Value, &Overrides, &std::path::Path) -> CliResult<String>;

fn run(cli: Cli) -> CliResult<String> {
    let (name, args, handler): (&str, RunArgs, Handler) = match cli.command {
        Command::Simulate(a) => ("simulate", a, commands::simulate),
        Command::Fit(a) => ("fit", a, commands::fit),
        Command::Predict(a) => ("predict", a, commands::predict_cmd),
        Command::Residuals(a) => ("residuals", a, commands::residuals),
        Command::Acf(a) => ("acf", a, commands::acf),
        Command::ReproSim(a) => ("repro-sim", a, commands::repro_sim),
    };
    let v = config::assemble(name, args.preset.as_deref(), args.config.as_deref())?;
    let o = Overrides { seed: args.seed, data: args.data };
    handler(v, &o, &args.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("mtd: {e}");
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
