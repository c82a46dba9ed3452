//! Per-tag EER reports in the canonical tag order, with CSV / table / JSON
//! rendering.

use crate::error::{Error, Result};

use super::eer::compute_eer;

/// Canonical tag order used by every report and by the model's output
/// vector: c, m, f, v, p, b, o.
pub const TAGS: [char; 7] = ['c', 'm', 'f', 'v', 'p', 'b', 'o'];

/// Index of a tag letter in the canonical order.
pub fn tag_index(tag: char) -> Option<usize> {
    TAGS.iter().position(|&t| t == tag)
}

/// Model scores and reference labels for one chunk.
#[derive(Debug, Clone)]
pub struct ScoredChunk {
    pub chunk_id: String,
    /// Posterior per tag, canonical order.
    pub scores: Vec<f64>,
    /// Reference presence per tag, canonical order.
    pub reference: Vec<bool>,
}

/// Per-tag equal error rates. A tag whose references are single-class in
/// the split is undefined (`None`) and excluded from the average.
#[derive(Debug, Clone)]
pub struct EerReport {
    pub per_tag: Vec<Option<f64>>,
    pub average: f64,
    pub warnings: Vec<String>,
}

impl EerReport {
    pub fn tag_eer(&self, tag: char) -> Option<f64> {
        self.per_tag[tag_index(tag)?]
    }
}

/// One EER per tag over all chunks, averaged over the defined tags.
pub fn eer_report(chunks: &[ScoredChunk]) -> Result<EerReport> {
    if chunks.is_empty() {
        return Err(Error::Data("no chunks to evaluate".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for c in chunks {
        if !seen.insert(c.chunk_id.as_str()) {
            return Err(Error::Data(format!(
                "duplicate chunk id '{}' in evaluation manifest",
                c.chunk_id
            )));
        }
    }
    let mut per_tag = Vec::with_capacity(TAGS.len());
    let mut warnings = Vec::new();
    for (k, &tag) in TAGS.iter().enumerate() {
        let scores: Vec<f64> = chunks.iter().map(|c| c.scores[k]).collect();
        let labels: Vec<bool> = chunks.iter().map(|c| c.reference[k]).collect();
        match compute_eer(&scores, &labels) {
            Ok(eer) => per_tag.push(Some(eer)),
            Err(Error::UndefinedMetric(_)) => {
                warnings.push(format!(
                    "tag '{tag}' has single-class references; EER undefined, excluded from average"
                ));
                per_tag.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let defined: Vec<f64> = per_tag.iter().filter_map(|e| *e).collect();
    if defined.is_empty() {
        return Err(Error::UndefinedMetric(
            "every tag is single-class in this split".into(),
        ));
    }
    let average = defined.iter().sum::<f64>() / defined.len() as f64;
    Ok(EerReport {
        per_tag,
        average,
        warnings,
    })
}

/// `tag,eer` lines followed by the average, mirroring the report table.
pub fn format_csv(report: &EerReport) -> String {
    let mut s = String::from("tag,eer\n");
    for (k, tag) in TAGS.iter().enumerate() {
        match report.per_tag[k] {
            Some(eer) => s.push_str(&format!("{tag},{eer:.6}\n")),
            None => s.push_str(&format!("{tag},undefined\n")),
        }
    }
    s.push_str(&format!("ave,{:.6}\n", report.average));
    s
}

/// Human-readable table: one header row of tags plus the average column.
pub fn format_table(report: &EerReport) -> String {
    let mut header = String::from("     ");
    let mut values = String::from("eer  ");
    for (k, tag) in TAGS.iter().enumerate() {
        header.push_str(&format!("{tag:>7}"));
        match report.per_tag[k] {
            Some(eer) => values.push_str(&format!("{eer:>7.3}")),
            None => values.push_str(&format!("{:>7}", "n/a")),
        }
    }
    header.push_str(&format!("{:>7}", "ave"));
    values.push_str(&format!("{:>7.3}", report.average));
    format!("{header}\n{values}\n")
}

/// Machine-readable rendering with stable key order.
pub fn format_json(report: &EerReport) -> String {
    let mut s = String::from("{\"per_tag\":{");
    for (k, tag) in TAGS.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        match report.per_tag[k] {
            Some(eer) => s.push_str(&format!("\"{tag}\":{eer:.6}")),
            None => s.push_str(&format!("\"{tag}\":null")),
        }
    }
    s.push_str(&format!("}},\"average\":{:.6}}}", report.average));
    s
}
