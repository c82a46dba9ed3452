//! Data ingestion and generation: WAV parsing with decimation, manifest
//! handling, and the synthetic stereo dataset generator.

pub mod manifest;
pub mod resample;
pub mod synth;
pub mod wav;

pub use manifest::{
    load_manifest, parse_manifest, resolve_audio_path, serialize_manifest, LabelSet, ManifestEntry,
};
pub use resample::{decimation_filter, resample_3to1};
pub use synth::{generate_synthetic, SynthChunk, SynthSpec, CHUNK_SAMPLES};
pub use wav::{enforce_chunk_duration, read_wav, write_wav};
