//! Training: batching, the Adam training loop with early stopping, and
//! cross-validation orchestration.

pub mod batches;
pub mod cv;
pub mod trainer;

pub use batches::make_batches;
pub use cv::{aggregate_reports, cross_validate, Fold, FoldPlan, FoldResult};
pub use trainer::{
    batch_gradients, evaluate, fit_normalization, load_dataset, score_chunks, train_fold,
    EpochRecord, LoadedChunk, TrainConfig, TrainLog,
};
