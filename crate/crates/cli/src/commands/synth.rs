use std::path::PathBuf;
use std::process::ExitCode;

use cgrnn_core::data::{generate_synthetic, SynthSpec};
use cgrnn_core::error::{Error, Result};

#[derive(clap::Args)]
pub struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 20)]
    n_chunks: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Enabled tag letters, e.g. "cmv" (default: all seven).
    #[arg(long, default_value = "bcfmopv")]
    tags: String,
    /// Background SNR range in dB, "lo,hi".
    #[arg(long, default_value = "12,24")]
    snr_db: String,
    /// Left,right gains of the lateralized source.
    #[arg(long, default_value = "1.0,0.2")]
    lateral_gains: String,
    /// Disable the energy-matched centered twin for chunks without the
    /// lateralized tag.
    #[arg(long)]
    no_twin: bool,
}

fn parse_pair(name: &str, s: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| Error::Config(format!("{name}: expected 'lo,hi', got '{s}'")))?;
    let lo = a
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{name}: bad number '{a}'")))?;
    let hi = b
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{name}: bad number '{b}'")))?;
    Ok((lo, hi))
}

pub fn run(args: SynthArgs) -> Result<ExitCode> {
    let spec = SynthSpec {
        n_chunks: args.n_chunks,
        seed: args.seed,
        tags: args.tags.chars().collect(),
        snr_db: parse_pair("--snr-db", &args.snr_db)?,
        lateral_gains: parse_pair("--lateral-gains", &args.lateral_gains)?,
        mono_twin: !args.no_twin,
    };
    let entries = generate_synthetic(&spec, &args.out_dir)?;
    println!(
        "generated {} chunks under {} (manifest.csv, spec.txt)",
        entries.len(),
        args.out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}
