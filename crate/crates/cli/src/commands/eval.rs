use std::path::PathBuf;
use std::process::ExitCode;

use cgrnn_core::data::manifest::load_manifest;
use cgrnn_core::error::Result;
use cgrnn_core::eval::{format_csv, format_json, format_table};
use cgrnn_core::model::load_checkpoint;
use cgrnn_core::train::{evaluate, load_dataset};
use cgrnn_core::TrainScalar;

#[derive(clap::Args)]
pub struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Write the report CSV here as well.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Feature cache directory (defaults to $CGRNN_CACHE_DIR when set).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

pub fn run(args: EvalArgs, threads: usize, json: bool) -> Result<ExitCode> {
    let params = load_checkpoint::<TrainScalar>(&args.checkpoint)?;
    let (entries, base_dir) = load_manifest(&args.manifest)?;
    let cache_dir = args
        .cache_dir
        .clone()
        .or_else(|| std::env::var_os("CGRNN_CACHE_DIR").map(PathBuf::from));
    let chunks = load_dataset::<TrainScalar>(
        &entries,
        &base_dir,
        params.config.basic,
        params.config.use_imd,
        cache_dir.as_deref(),
    )?;
    let report = evaluate(&params, &chunks, threads != 1)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if json {
        println!("{}", format_json(&report));
    } else {
        print!("{}", format_table(&report));
    }
    if let Some(out) = &args.out {
        std::fs::write(out, format_csv(&report))?;
    }
    Ok(ExitCode::SUCCESS)
}
