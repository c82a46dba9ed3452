//! Cross-validation orchestration over a fold plan (the official protocol
//! uses five folds).

use std::path::PathBuf;

use crate::data::manifest::ManifestEntry;
use crate::dsp::BasicKind;
use crate::error::{Error, Result};
use crate::eval::{EerReport, TAGS};
use crate::model::ModelConfig;
use crate::scalar::Scalar;

use super::trainer::{evaluate, load_dataset, train_fold, TrainConfig, TrainLog};

/// One fold: train and test manifests plus the directory their relative
/// audio paths resolve against.
#[derive(Debug, Clone)]
pub struct Fold {
    pub train: Vec<ManifestEntry>,
    pub test: Vec<ManifestEntry>,
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    /// Within every fold, train and test must be disjoint by chunk id.
    pub fn validate(&self) -> Result<()> {
        if self.folds.is_empty() {
            return Err(Error::Config("fold plan is empty".into()));
        }
        for (i, fold) in self.folds.iter().enumerate() {
            let train_ids: std::collections::HashSet<&str> =
                fold.train.iter().map(|e| e.chunk_id.as_str()).collect();
            for e in &fold.test {
                if train_ids.contains(e.chunk_id.as_str()) {
                    return Err(Error::Config(format!(
                        "fold {i}: chunk '{}' appears in both train and test",
                        e.chunk_id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Per-fold results.
#[derive(Debug, Clone)]
pub struct FoldResult {
    pub report: EerReport,
    pub log: TrainLog,
}

/// Train and evaluate every fold. Returns one result per fold, in order.
pub fn cross_validate<S: Scalar>(
    plan: &FoldPlan,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    basic: BasicKind,
    cache_dir: Option<&std::path::Path>,
) -> Result<Vec<FoldResult>> {
    plan.validate()?;
    let mut results = Vec::with_capacity(plan.folds.len());
    for fold in &plan.folds {
        let train = load_dataset::<S>(
            &fold.train,
            &fold.base_dir,
            basic,
            model_cfg.use_imd,
            cache_dir,
        )?;
        let test = load_dataset::<S>(
            &fold.test,
            &fold.base_dir,
            basic,
            model_cfg.use_imd,
            cache_dir,
        )?;
        let (params, log) = train_fold(&train, &test, model_cfg, train_cfg)?;
        let report = evaluate(&params, &test, train_cfg.threads != 1)?;
        results.push(FoldResult { report, log });
    }
    Ok(results)
}

/// Average the per-tag EERs across folds (a tag undefined in some fold is
/// averaged over the folds where it is defined).
pub fn aggregate_reports(reports: &[&EerReport]) -> EerReport {
    let mut per_tag = Vec::with_capacity(TAGS.len());
    for k in 0..TAGS.len() {
        let defined: Vec<f64> = reports.iter().filter_map(|r| r.per_tag[k]).collect();
        per_tag.push(if defined.is_empty() {
            None
        } else {
            Some(defined.iter().sum::<f64>() / defined.len() as f64)
        });
    }
    let defined: Vec<f64> = per_tag.iter().filter_map(|e| *e).collect();
    let average = if defined.is_empty() {
        f64::NAN
    } else {
        defined.iter().sum::<f64>() / defined.len() as f64
    };
    EerReport {
        per_tag,
        average,
        warnings: Vec::new(),
    }
}
