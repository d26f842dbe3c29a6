//! `darkwann`: ingest flow data, select features, search reservoir
//! topologies, train, evaluate and explain.

mod artifacts;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{Context, EvalSplit};
use crate::config::RunConfig;
use crate::error::Result;

#[derive(Parser)]
#[command(name = "darkwann", version, about = "Reservoir-network darknet traffic classifier")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for all artifacts (overrides the config file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replace existing artifacts instead of refusing.
    #[arg(long, global = true)]
    overwrite: bool,
    /// Only print errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load, clean and split the dataset; fit normalisation on the train split.
    Ingest,
    /// Score features by predictive power against the label and select.
    Pps,
    /// Evolve reservoir topologies with shared-weight evaluation.
    Search,
    /// Train a reservoir's readout and evaluate it on the test split.
    Train {
        /// Layer sizes, e.g. "(13-11-09)".
        #[arg(long, conflicts_with = "genome_file")]
        genome: Option<String>,
        /// Genome JSON, e.g. best_genome.json from `search`.
        #[arg(long)]
        genome_file: Option<PathBuf>,
    },
    /// Re-evaluate the saved model on a split.
    Evaluate {
        #[arg(long, value_enum, default_value = "test")]
        split: EvalSplit,
    },
    /// Shapley explanations for test rows, exported as plot data.
    Explain {
        /// Number of test rows to explain.
        #[arg(long)]
        rows: Option<usize>,
        /// Enumerate coalitions exactly (at most 15 features).
        #[arg(long)]
        exact: bool,
    },
    /// Write a synthetic Gaussian-blob dataset.
    Datagen,
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.out_dir = out;
    }
    config.validate()?;
    let ctx = Context { config, overwrite: cli.overwrite, quiet: cli.quiet };
    match cli.command {
        Command::Ingest => commands::ingest(&ctx),
        Command::Pps => commands::pps(&ctx),
        Command::Search => commands::search(&ctx),
        Command::Train { genome, genome_file } => commands::train(&ctx, genome.as_deref(), genome_file.as_deref()),
        Command::Evaluate { split } => commands::evaluate(&ctx, split),
        Command::Explain { rows, exact } => commands::explain(&ctx, rows, exact),
        Command::Datagen => commands::datagen(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("darkwann: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
