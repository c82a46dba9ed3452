use std::path::PathBuf;
use std::process::ExitCode;

use cgrnn_core::data::manifest::{load_manifest, ManifestEntry};
use cgrnn_core::error::{Error, Result};
use cgrnn_core::eval::{format_csv, format_json, format_table};
use cgrnn_core::model::save_checkpoint;
use cgrnn_core::train::{
    aggregate_reports, cross_validate, load_dataset, train_fold, Fold, FoldPlan,
};
use cgrnn_core::TrainScalar;

use crate::settings::{cache_dir_opt, resolve, TrainFlags};

#[derive(clap::Args)]
pub struct CvArgs {
    /// One fold as "train.csv,test.csv"; repeat per fold (the official
    /// protocol uses five).
    #[arg(long = "fold", value_name = "TRAIN,TEST")]
    folds: Vec<String>,
    /// Output directory for per-fold logs and reports.
    #[arg(long, default_value = "cv-out")]
    out_dir: PathBuf,
    /// After the per-fold runs, retrain one model on the union of all fold
    /// chunks (validated on the first fold's test manifest unless
    /// --retrain-valid is given) and save it alongside the reports.
    #[arg(long)]
    retrain_all: bool,
    /// Validation manifest for --retrain-all.
    #[arg(long)]
    retrain_valid: Option<PathBuf>,
    #[command(flatten)]
    flags: TrainFlags,
}

pub fn run(args: CvArgs, threads: usize, json: bool) -> Result<ExitCode> {
    if args.folds.is_empty() {
        return Err(Error::Config("cv needs at least one --fold TRAIN,TEST".into()));
    }
    let settings = resolve(&args.flags, threads)?;
    let mut plan = FoldPlan::default();
    let mut fold_paths = Vec::new();
    for (i, spec) in args.folds.iter().enumerate() {
        let (train_path, test_path) = spec.split_once(',').ok_or_else(|| {
            Error::Config(format!("fold {i}: expected TRAIN,TEST, got '{spec}'"))
        })?;
        let (train, train_base) = load_manifest(std::path::Path::new(train_path))?;
        let (test, test_base) = load_manifest(std::path::Path::new(test_path))?;
        if train_base != test_base {
            return Err(Error::Config(format!(
                "fold {i}: train and test manifests must share a directory"
            )));
        }
        plan.folds.push(Fold {
            train,
            test,
            base_dir: train_base,
        });
        fold_paths.push((train_path.to_string(), test_path.to_string()));
    }

    std::fs::create_dir_all(&args.out_dir)?;
    let results = cross_validate::<TrainScalar>(
        &plan,
        &settings.model,
        &settings.train,
        settings.model.basic,
        cache_dir_opt(&settings),
    )?;

    for (i, result) in results.iter().enumerate() {
        std::fs::write(
            args.out_dir.join(format!("fold{i}_log.csv")),
            result.log.to_csv(),
        )?;
        std::fs::write(
            args.out_dir.join(format!("fold{i}_report.csv")),
            format_csv(&result.report),
        )?;
        if !json {
            println!("fold {i}:");
            print!("{}", format_table(&result.report));
        }
    }
    let reports: Vec<_> = results.iter().map(|r| &r.report).collect();
    let aggregate = aggregate_reports(&reports);
    std::fs::write(args.out_dir.join("average_report.csv"), format_csv(&aggregate))?;
    if json {
        println!("{}", format_json(&aggregate));
    } else {
        println!("average over {} folds:", results.len());
        print!("{}", format_table(&aggregate));
    }

    if args.retrain_all {
        let mut union: Vec<ManifestEntry> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for fold in &plan.folds {
            for e in fold.train.iter().chain(&fold.test) {
                if seen.insert(e.chunk_id.clone()) {
                    union.push(e.clone());
                }
            }
        }
        let (valid_entries, valid_base) = match &args.retrain_valid {
            Some(path) => load_manifest(path)?,
            None => (plan.folds[0].test.clone(), plan.folds[0].base_dir.clone()),
        };
        let train = load_dataset::<TrainScalar>(
            &union,
            &plan.folds[0].base_dir,
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
        save_checkpoint(&args.out_dir.join("retrain_all.ckpt"), &params)?;
        std::fs::write(args.out_dir.join("retrain_all_log.csv"), log.to_csv())?;
        println!(
            "retrained on {} chunks, checkpoint {}",
            train.len(),
            args.out_dir.join("retrain_all.ckpt").display()
        );
    }
    Ok(ExitCode::SUCCESS)
}
