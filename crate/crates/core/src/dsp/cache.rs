//! On-disk feature cache, one file per chunk per feature kind.
//!
//! Layout (little-endian): magic `CGT1`, kind tag (u8), n_frames (u32),
//! dim (u32), then row-major 32-bit floats.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

use super::features::{FeatureKind, FeatureSequence};

pub const CACHE_MAGIC: &[u8; 4] = b"CGT1";

pub fn write_feature<S: Scalar>(path: &Path, seq: &FeatureSequence<S>) -> Result<()> {
    let mut bytes = Vec::with_capacity(13 + seq.data.len() * 4);
    bytes.extend_from_slice(CACHE_MAGIC);
    bytes.push(seq.kind.tag());
    bytes.extend_from_slice(&(seq.data.rows() as u32).to_le_bytes());
    bytes.extend_from_slice(&(seq.data.cols() as u32).to_le_bytes());
    for v in seq.data.data() {
        bytes.extend_from_slice(&v.to_f32().unwrap().to_le_bytes());
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

pub fn read_feature<S: Scalar>(path: &Path) -> Result<FeatureSequence<S>> {
    let bytes = fs::read(path)?;
    let fail = |offset: usize, message: &str| Error::Format {
        offset: offset as u64,
        message: message.to_string(),
    };
    if bytes.len() < 13 {
        return Err(fail(bytes.len(), "feature cache file truncated"));
    }
    if &bytes[0..4] != CACHE_MAGIC {
        return Err(fail(0, "bad feature cache magic"));
    }
    let kind = FeatureKind::from_tag(bytes[4])
        .ok_or_else(|| fail(4, "unknown feature kind tag"))?;
    let n_frames = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    if dim != kind.dim() {
        return Err(fail(9, "feature dim does not match kind"));
    }
    let expected = 13 + n_frames * dim * 4;
    if bytes.len() != expected {
        return Err(fail(bytes.len().min(expected), "feature cache length mismatch"));
    }
    let mut data = Vec::with_capacity(n_frames * dim);
    for chunk in bytes[13..].chunks_exact(4) {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        data.push(S::from(v).unwrap());
    }
    FeatureSequence::new(kind, Tensor2::from_vec(n_frames, dim, data)?)
}

/// Canonical cache file name for a chunk + kind.
pub fn cache_file_name(chunk_id: &str, kind: FeatureKind) -> String {
    format!("{}.{}.cgt", chunk_id, kind.name())
}
