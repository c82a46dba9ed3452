//! Seeded synthetic stereo dataset generator, a desk-scale stand-in for a
//! real tagging corpus. Each tag letter maps to a distinct source type:
//!
//! * `c` — cluster of high tones (2–6 kHz)
//! * `m` — cluster of low tones (100–500 Hz)
//! * `f` — mid-range chirps (500–2000 Hz)
//! * `v` — band-limited noise (1–2 kHz) at a fixed lateral position
//! * `p` — percussive clicks (decaying noise bursts)
//! * `b` — broadband noise
//! * `o` — tones at arbitrary frequencies
//!
//! All sources except `v` sit in the center (equal channel gains). The `v`
//! source carries the spatial cue: it plays from one side. With
//! `mono_twin` enabled, chunks *without* the `v` tag receive the same band
//! noise centered at matched channel-average power, which makes the tag
//! invisible to any mono (channel-averaged) feature and detectable only
//! through the stereo difference.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::Rng;

use super::manifest::{serialize_manifest, LabelSet, ManifestEntry};
use super::wav::write_wav;

pub const CHUNK_SAMPLES: usize = 64_000; // 4 s at 16 kHz
const RATE: f64 = 16_000.0;
/// Per-source RMS before channel gains.
const SOURCE_RMS: f64 = 0.1;
/// Centered channel gain pair (equal power on both sides).
const CENTER_GAIN: (f64, f64) = (0.7, 0.7);

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub n_chunks: usize,
    pub seed: u64,
    /// Enabled tag letters; each is present in a chunk with probability 1/2.
    pub tags: Vec<char>,
    /// Background-noise SNR range in dB (sampled per chunk).
    pub snr_db: (f64, f64),
    /// Left/right gains of the lateralized `v` source.
    pub lateral_gains: (f64, f64),
    /// Add an energy-matched centered twin of the `v` source to chunks
    /// without the `v` tag.
    pub mono_twin: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_chunks: 20,
            seed: 1,
            tags: vec!['b', 'c', 'f', 'm', 'o', 'p', 'v'],
            snr_db: (12.0, 24.0),
            lateral_gains: (1.0, 0.2),
            mono_twin: true,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_chunks == 0 {
            return Err(Error::Config("n_chunks must be positive".into()));
        }
        if self.tags.is_empty() {
            return Err(Error::Config("at least one source tag must be enabled".into()));
        }
        for &t in &self.tags {
            if crate::eval::tag_index(t).is_none() {
                return Err(Error::Config(format!("unknown tag letter '{t}'")));
            }
        }
        if self.lateral_gains.0 < 0.0 || self.lateral_gains.1 < 0.0 {
            return Err(Error::Config("gains must be non-negative".into()));
        }
        if self.snr_db.1 < self.snr_db.0 {
            return Err(Error::Config("snr range must be lo <= hi".into()));
        }
        Ok(())
    }

    fn provenance(&self) -> String {
        let tags: String = self.tags.iter().collect();
        format!(
            "n_chunks={}\nseed={}\ntags={}\nsnr_db_lo={}\nsnr_db_hi={}\nlateral_gain_left={}\nlateral_gain_right={}\nmono_twin={}\n",
            self.n_chunks,
            self.seed,
            tags,
            self.snr_db.0,
            self.snr_db.1,
            self.lateral_gains.0,
            self.lateral_gains.1,
            self.mono_twin,
        )
    }
}

fn normalize_rms(signal: &mut [f64], target: f64) {
    let rms = (signal.iter().map(|v| v * v).sum::<f64>() / signal.len() as f64).sqrt();
    if rms > 0.0 {
        let scale = target / rms;
        signal.iter_mut().for_each(|v| *v *= scale);
    }
}

fn tone_cluster(rng: &mut Rng, f_lo: f64, f_hi: f64, count: usize) -> Vec<f64> {
    let mut out = vec![0.0; CHUNK_SAMPLES];
    for _ in 0..count {
        let freq = rng.range(f_lo, f_hi);
        let phase = rng.range(0.0, std::f64::consts::TAU);
        for (i, v) in out.iter_mut().enumerate() {
            *v += (std::f64::consts::TAU * freq * i as f64 / RATE + phase).sin();
        }
    }
    normalize_rms(&mut out, SOURCE_RMS);
    out
}

fn chirps(rng: &mut Rng) -> Vec<f64> {
    let mut out = vec![0.0; CHUNK_SAMPLES];
    for _ in 0..2 {
        let dur = (RATE * rng.range(0.8, 1.5)) as usize;
        let start = rng.below(CHUNK_SAMPLES - dur);
        let f0 = rng.range(500.0, 900.0);
        let f1 = rng.range(1400.0, 2000.0);
        let phase0 = rng.range(0.0, std::f64::consts::TAU);
        for i in 0..dur {
            let t = i as f64 / RATE;
            let sweep = (f1 - f0) / (2.0 * dur as f64 / RATE);
            let phase = std::f64::consts::TAU * (f0 * t + sweep * t * t) + phase0;
            out[start + i] += phase.sin();
        }
    }
    normalize_rms(&mut out, SOURCE_RMS);
    out
}

/// White noise band-passed with a windowed-sinc filter (difference of two
/// low-passes, 127 taps, Hamming window).
fn band_noise(rng: &mut Rng, f_lo: f64, f_hi: f64) -> Vec<f64> {
    let n_taps = 127usize;
    let center = (n_taps - 1) as f64 / 2.0;
    let sinc_lp = |fc: f64, i: usize| -> f64 {
        let x = i as f64 - center;
        if x == 0.0 {
            2.0 * fc
        } else {
            (2.0 * std::f64::consts::PI * fc * x).sin() / (std::f64::consts::PI * x)
        }
    };
    let taps: Vec<f64> = (0..n_taps)
        .map(|i| {
            let w = 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n_taps - 1) as f64).cos();
            (sinc_lp(f_hi / RATE, i) - sinc_lp(f_lo / RATE, i)) * w
        })
        .collect();
    let white: Vec<f64> = (0..CHUNK_SAMPLES + n_taps).map(|_| rng.normal()).collect();
    let mut out = vec![0.0; CHUNK_SAMPLES];
    for (k, v) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (i, &t) in taps.iter().enumerate() {
            acc += t * white[k + n_taps - i];
        }
        *v = acc;
    }
    normalize_rms(&mut out, SOURCE_RMS);
    out
}

fn clicks(rng: &mut Rng) -> Vec<f64> {
    let mut out = vec![0.0; CHUNK_SAMPLES];
    let n_clicks = 8 + rng.below(8);
    for _ in 0..n_clicks {
        let start = rng.below(CHUNK_SAMPLES - 200);
        let polarity = if rng.chance(0.5) { 1.0 } else { -1.0 };
        for i in 0..160 {
            out[start + i] += polarity * (-(i as f64) / 30.0).exp() * rng.normal();
        }
    }
    normalize_rms(&mut out, SOURCE_RMS);
    out
}

fn broadband(rng: &mut Rng) -> Vec<f64> {
    let mut out: Vec<f64> = (0..CHUNK_SAMPLES).map(|_| rng.normal()).collect();
    normalize_rms(&mut out, SOURCE_RMS);
    out
}

/// The `v` band (used by the generator and by tests that inspect the IMD
/// over this band).
pub const LATERAL_BAND_HZ: (f64, f64) = (1000.0, 2000.0);

fn source_for(tag: char, rng: &mut Rng) -> Vec<f64> {
    match tag {
        'c' => tone_cluster(rng, 2000.0, 6000.0, 3),
        'm' => tone_cluster(rng, 100.0, 500.0, 3),
        'f' => chirps(rng),
        'v' => band_noise(rng, LATERAL_BAND_HZ.0, LATERAL_BAND_HZ.1),
        'p' => clicks(rng),
        'b' => broadband(rng),
        'o' => tone_cluster(rng, 300.0, 7000.0, 2),
        _ => unreachable!("validated tag set"),
    }
}

/// One generated chunk (channels at 16 kHz) plus its labels.
pub struct SynthChunk {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub labels: LabelSet,
}

/// Generate one chunk with the given per-chunk RNG.
pub fn generate_chunk(spec: &SynthSpec, rng: &mut Rng) -> SynthChunk {
    let mut labels = LabelSet::empty();
    let mut left = vec![0.0f64; CHUNK_SAMPLES];
    let mut right = vec![0.0f64; CHUNK_SAMPLES];

    let mut has_v = false;
    for &tag in &spec.tags {
        if rng.chance(0.5) {
            labels.insert(tag);
            if tag == 'v' {
                has_v = true;
            }
        }
    }

    for &tag in &spec.tags {
        let v_enabled = spec.tags.contains(&'v');
        if tag == 'v' && !labels.contains('v') {
            // Centered twin: same band noise at matched channel-average
            // power, so the mono merge carries no information about the tag.
            if spec.mono_twin && v_enabled {
                let source = source_for('v', rng);
                let g = (spec.lateral_gains.0 + spec.lateral_gains.1) / 2.0;
                for (i, &s) in source.iter().enumerate() {
                    left[i] += g * s;
                    right[i] += g * s;
                }
            }
            continue;
        }
        if !labels.contains(tag) {
            continue;
        }
        let source = source_for(tag, rng);
        let (gl, gr) = if tag == 'v' {
            spec.lateral_gains
        } else {
            CENTER_GAIN
        };
        for (i, &s) in source.iter().enumerate() {
            left[i] += gl * s;
            right[i] += gr * s;
        }
    }

    // Background noise, independent per channel, at a sampled SNR against
    // the mixed signal power (or a nominal floor for silence chunks).
    let snr_db = rng.range(spec.snr_db.0, spec.snr_db.1);
    let sig_power: f64 = left
        .iter()
        .zip(&right)
        .map(|(l, r)| (l * l + r * r) / 2.0)
        .sum::<f64>()
        / CHUNK_SAMPLES as f64;
    let sig_rms = sig_power.sqrt().max(SOURCE_RMS * 0.1);
    let noise_rms = sig_rms / 10f64.powf(snr_db / 20.0);
    for i in 0..CHUNK_SAMPLES {
        left[i] += noise_rms * rng.normal();
        right[i] += noise_rms * rng.normal();
    }

    // Common peak normalization keeps the inter-channel ratios intact.
    let peak = left
        .iter()
        .chain(right.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.95 {
        let scale = 0.95 / peak;
        left.iter_mut().for_each(|v| *v *= scale);
        right.iter_mut().for_each(|v| *v *= scale);
    }

    let _ = has_v;
    SynthChunk {
        left,
        right,
        labels,
    }
}

/// Generate the dataset: `chunks/*.wav`, `manifest.csv` and a `spec.txt`
/// provenance file under `out_dir`. Returns the manifest entries.
pub fn generate_synthetic(spec: &SynthSpec, out_dir: &Path) -> Result<Vec<ManifestEntry>> {
    spec.validate()?;
    let chunks_dir = out_dir.join("chunks");
    fs::create_dir_all(&chunks_dir)?;

    let mut master = Rng::new(spec.seed);
    let mut entries = Vec::with_capacity(spec.n_chunks);
    for i in 0..spec.n_chunks {
        let mut chunk_rng = master.split();
        let chunk = generate_chunk(spec, &mut chunk_rng);
        let file_name = format!("chunk_{i:04}.wav");
        write_wav(
            &chunks_dir.join(&file_name),
            &chunk.left,
            &chunk.right,
            16_000,
        )?;
        entries.push(ManifestEntry {
            chunk_id: format!("chunk_{i:04}"),
            path: format!("chunks/{file_name}"),
            labels: chunk.labels,
        });
    }
    fs::write(out_dir.join("manifest.csv"), serialize_manifest(&entries))?;
    fs::write(out_dir.join("spec.txt"), spec.provenance())?;
    Ok(entries)
}
