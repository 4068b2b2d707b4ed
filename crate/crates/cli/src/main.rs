//! Command-line front end for the biomarker-uncertainty pipeline.
//!
//! Subcommands: `simulate`, `confidence`, `group-analysis`, `classify`,
//! `evaluate`. Every randomized step takes `--seed` (default from
//! `BIOUNCERT_SEED`, then 0) and is bit-deterministic at any `--jobs` level.
//!
//! Exit codes: 0 success, 1 runtime/I-O failure, 2 argument errors,
//! 3 report produced but some cells failed.

mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{classify, confidence, evaluate, group, simulate, CmdError, CmdOutcome};

#[derive(Parser)]
#[command(
    name = "biouncert",
    version,
    about = "Propagates segmentation uncertainty into imaging-biomarker statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a synthetic cohort: phantoms, sample stacks, manifest,
    /// cohort CSV skeleton, and planted-truth JSON
    Simulate(simulate::Args),
    /// Compute per-subject confidence measures and augment the cohort CSV
    Confidence(confidence::Args),
    /// Coefficient-comparison study (beta_4 per model variant)
    #[command(name = "group-analysis")]
    GroupAnalysis(group::Args),
    /// Repeated-random-split diabetes classification study
    Classify(classify::Args),
    /// Full evaluation of a simulated dataset: dice, group, classification
    Evaluate(evaluate::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => simulate::run(args),
        Command::Confidence(args) => confidence::run(args),
        Command::GroupAnalysis(args) => group::run(args),
        Command::Classify(args) => classify::run(args),
        Command::Evaluate(args) => evaluate::run(args),
    };
    match outcome {
        Ok(CmdOutcome::Success) => ExitCode::SUCCESS,
        Ok(CmdOutcome::CellsFailed) => {
            eprintln!("warning: some report cells failed; see the rendered report");
            ExitCode::from(3)
        }
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Run(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
