//! `cgrnn` — feature extraction, training, evaluation, cross-validation,
//! gradient checking and synthetic-data generation for the stereo audio
//! tagger.
//!
//! Exit codes: 0 success, 2 input/config/format error, 3 numeric
//! divergence, 4 gradient-check failure.

mod commands;
mod settings;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cgrnn", version, about = "Convolutional gated recurrent network for stereo audio tagging")]
struct Cli {
    /// Worker threads for batch-parallel sections; 1 forces the
    /// single-threaded deterministic path (results are identical either
    /// way, the merge order is fixed).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Emit machine-readable JSON reports instead of tables.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract per-chunk feature cache files from a manifest.
    Extract(commands::extract::ExtractArgs),
    /// Train a model on a train/validation manifest pair.
    Train(commands::train::TrainArgs),
    /// Evaluate a checkpoint over a manifest (per-tag EER table).
    Eval(commands::eval::EvalArgs),
    /// Cross-validate over a fold plan.
    Cv(commands::cv::CvArgs),
    /// Run the finite-difference gradient suite.
    Gradcheck(commands::gradcheck::GradcheckArgs),
    /// Generate a synthetic stereo dataset.
    Synth(commands::synth::SynthArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads > 0 {
            // Ignore the error if a pool already exists (tests call in-process).
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
    let threads = cli.threads.unwrap_or(1);
    let result = match cli.command {
        Command::Extract(args) => commands::extract::run(args),
        Command::Train(args) => commands::train::run(args, threads),
        Command::Eval(args) => commands::eval::run(args, threads, cli.json),
        Command::Cv(args) => commands::cv::run(args, threads, cli.json),
        Command::Gradcheck(args) => commands::gradcheck::run(args),
        Command::Synth(args) => commands::synth::run(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numeric() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
