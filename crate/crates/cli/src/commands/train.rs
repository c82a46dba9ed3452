use std::path::PathBuf;
use std::process::ExitCode;

use cgrnn_core::data::manifest::load_manifest;
use cgrnn_core::error::Result;
use cgrnn_core::model::save_checkpoint;
use cgrnn_core::train::{load_dataset, train_fold};
use cgrnn_core::TrainScalar;

use crate::settings::{cache_dir_opt, resolve, TrainFlags};

#[derive(clap::Args)]
pub struct TrainArgs {
    #[arg(long)]
    train_manifest: PathBuf,
    #[arg(long)]
    valid_manifest: PathBuf,
    /// Where to write the best-validation checkpoint.
    #[arg(long, default_value = "model.ckpt")]
    checkpoint: PathBuf,
    /// Where to write the per-epoch training log CSV.
    #[arg(long)]
    log: Option<PathBuf>,
    #[command(flatten)]
    flags: TrainFlags,
}

pub fn run(args: TrainArgs, threads: usize) -> Result<ExitCode> {
    let settings = resolve(&args.flags, threads)?;
    let (train_entries, train_base) = load_manifest(&args.train_manifest)?;
    let (valid_entries, valid_base) = load_manifest(&args.valid_manifest)?;

    let train = load_dataset::<TrainScalar>(
        &train_entries,
        &train_base,
        settings.model.basic,
        settings.model.use_imd,
        cache_dir_opt(&settings),
    )?;
    let valid = load_dataset::<TrainScalar>(
        &valid_entries,
        &valid_base,
        settings.model.basic,
        settings.model.use_imd,
        cache_dir_opt(&settings),
    )?;

    let (params, log) = train_fold(&train, &valid, &settings.model, &settings.train)?;
    save_checkpoint(&args.checkpoint, &params)?;
    if let Some(log_path) = &args.log {
        std::fs::write(log_path, log.to_csv())?;
    }
    let best = log
        .epochs
        .iter()
        .map(|r| r.valid_eer)
        .fold(f64::INFINITY, f64::min);
    println!(
        "trained {} epochs, best validation EER {:.4}, checkpoint {}",
        log.epochs.len(),
        best,
        args.checkpoint.display()
    );
    Ok(ExitCode::SUCCESS)
}
