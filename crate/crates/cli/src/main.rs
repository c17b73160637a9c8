//! `cyclevc`: featurize speech corpora, train cycle-consistent conversion
//! models, convert utterances and evaluate the results.

mod commands;
mod config;
mod corpus;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{convert, evaluate, featurize, train};
use config::{Backend, RunConfig};
use error::CliResult;

#[derive(Parser, Debug)]
#[command(name = "cyclevc", version, about = "Non-parallel voice conversion toolkit")]
struct Cli {
    /// TOML run configuration; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed for initialization and crop sampling
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Vocoder backend
    #[arg(long, global = true, value_enum)]
    backend: Option<Backend>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    Featurize(featurize::FeaturizeArgs),
    Train(train::TrainArgs),
    Convert(convert::ConvertArgs),
    Evaluate(evaluate::EvaluateArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.training.seed = seed;
    }
    if let Some(b) = cli.backend {
        cfg.backend = b;
    }
    match &cli.command {
        Command::Featurize(a) => featurize::run(a, &cfg),
        Command::Train(a) => train::run(a, &mut cfg),
        Command::Convert(a) => convert::run(a, &cfg),
        Command::Evaluate(a) => evaluate::run(a, &mut cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(error::EXIT_USER as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
