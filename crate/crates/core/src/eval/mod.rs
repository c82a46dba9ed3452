//! Equal error rate: threshold sweep over the scores with linear
//! interpolation at the crossing of the false-negative and false-positive
//! rate curves, computed per tag and averaged.

pub mod eer;
pub mod report;

pub use eer::{compute_eer, roc_points};
pub use report::{
    eer_report, format_csv, format_json, format_table, tag_index, EerReport, ScoredChunk, TAGS,
};
