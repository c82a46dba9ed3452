use std::path::PathBuf;
use std::process::ExitCode;

use cgrnn_core::data::manifest::{load_manifest, resolve_audio_path};
use cgrnn_core::data::{enforce_chunk_duration, read_wav};
use cgrnn_core::dsp::cache::{cache_file_name, write_feature};
use cgrnn_core::dsp::{extract_kind, FeatureKind};
use cgrnn_core::error::{Error, Result};
use cgrnn_core::TrainScalar;

#[derive(clap::Args)]
pub struct ExtractArgs {
    /// Manifest CSV (chunk_id,path,labels).
    #[arg(long)]
    manifest: PathBuf,
    /// Feature kind: mfb | spec | raw | imd | ild | ipd.
    #[arg(long)]
    kind: String,
    /// Output directory for the cache files.
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn run(args: ExtractArgs) -> Result<ExitCode> {
    let kind = FeatureKind::parse(&args.kind)?;
    let (entries, base_dir) = load_manifest(&args.manifest)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let spatial = matches!(
        kind,
        FeatureKind::Imd257 | FeatureKind::Ild257 | FeatureKind::Ipd257
    );
    for entry in &entries {
        let path = resolve_audio_path(&base_dir, entry);
        let wave = read_wav::<TrainScalar>(&path).map_err(|e| match e {
            Error::Io(io) => Error::Data(format!(
                "chunk '{}': cannot read '{}': {io}",
                entry.chunk_id,
                path.display()
            )),
            other => other,
        })?;
        let wave = enforce_chunk_duration(wave, &entry.chunk_id)?;
        if wave.duplicated_mono && spatial {
            eprintln!(
                "warning: chunk '{}' is mono (channels duplicated); {} features will be zero",
                entry.chunk_id,
                kind.name()
            );
        }
        let seq = extract_kind(&wave, kind)?;
        write_feature(&args.out_dir.join(cache_file_name(&entry.chunk_id, kind)), &seq)?;
    }
    println!(
        "extracted {} {} feature files into {}",
        entries.len(),
        kind.name(),
        args.out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}
