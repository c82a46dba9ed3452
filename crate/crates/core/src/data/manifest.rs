//! Chunk manifests: CSV lines `chunk_id,path,labels` where `labels` is a
//! string of tag letters in any order (empty means a silence chunk).

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::{tag_index, TAGS};
use crate::scalar::Scalar;

/// Set of active tags, stored as a bitmask over the canonical tag order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LabelSet(u8);

impl LabelSet {
    pub fn empty() -> Self {
        LabelSet(0)
    }

    pub fn from_letters(s: &str) -> Result<Self> {
        let mut mask = 0u8;
        for ch in s.chars() {
            let idx = tag_index(ch)
                .ok_or_else(|| Error::Label(format!("unknown tag letter '{ch}'")))?;
            mask |= 1 << idx;
        }
        Ok(LabelSet(mask))
    }

    pub fn insert(&mut self, tag: char) {
        if let Some(idx) = tag_index(tag) {
            self.0 |= 1 << idx;
        }
    }

    pub fn contains(&self, tag: char) -> bool {
        tag_index(tag).map(|idx| self.0 & (1 << idx) != 0).unwrap_or(false)
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    /// Letters sorted alphabetically (the normalized manifest form).
    pub fn to_letters(&self) -> String {
        let mut letters: Vec<char> = TAGS.iter().copied().filter(|&t| self.contains(t)).collect();
        letters.sort_unstable();
        letters.into_iter().collect()
    }

    /// 0/1 target vector in canonical tag order.
    pub fn to_targets<S: Scalar>(&self) -> Vec<S> {
        (0..TAGS.len())
            .map(|idx| {
                if self.0 & (1 << idx) != 0 {
                    S::one()
                } else {
                    S::zero()
                }
            })
            .collect()
    }

    /// Presence flags in canonical tag order.
    pub fn to_flags(&self) -> Vec<bool> {
        (0..TAGS.len()).map(|idx| self.0 & (1 << idx) != 0).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub chunk_id: String,
    pub path: String,
    pub labels: LabelSet,
}

/// Parse manifest text. Blank lines are skipped; errors carry the 1-based
/// line number.
pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 fields (chunk_id,path,labels), got {}", fields.len()),
            });
        }
        let chunk_id = fields[0].trim();
        let path = fields[1].trim();
        if chunk_id.is_empty() || path.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty chunk_id or path field".into(),
            });
        }
        if !seen_ids.insert(chunk_id.to_string()) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate chunk id '{chunk_id}'"),
            });
        }
        let labels = LabelSet::from_letters(fields[2].trim()).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        entries.push(ManifestEntry {
            chunk_id: chunk_id.to_string(),
            path: path.to_string(),
            labels,
        });
    }
    Ok(entries)
}

/// Render entries back to the normalized CSV form (labels sorted).
pub fn serialize_manifest(entries: &[ManifestEntry]) -> String {
    let mut s = String::new();
    for e in entries {
        s.push_str(&format!("{},{},{}\n", e.chunk_id, e.path, e.labels.to_letters()));
    }
    s
}

/// Load a manifest file; relative audio paths resolve against the
/// manifest's directory, which is returned as the base.
pub fn load_manifest(path: &Path) -> Result<(Vec<ManifestEntry>, PathBuf)> {
    let text = std::fs::read_to_string(path)?;
    let entries = parse_manifest(&text)?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    Ok((entries, base))
}

/// Resolve one entry's audio path against the manifest base directory.
pub fn resolve_audio_path(base: &Path, entry: &ManifestEntry) -> PathBuf {
    let p = Path::new(&entry.path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
