//! Minimal RIFF/WAVE reader and writer for 16-bit PCM, the only codec the
//! pipeline ingests. The reader reports malformed input with the byte
//! offset where parsing failed.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::dsp::{Waveform, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::resample::resample_3to1;

struct WavReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> WavReader<'a> {
    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Format {
            offset: self.pos as u64,
            message: message.into(),
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.fail(format!("truncated file while reading {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32_le(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

struct ParsedWav {
    channels: Vec<Vec<i16>>,
    sample_rate: u32,
}

fn parse_wav(bytes: &[u8]) -> Result<ParsedWav> {
    let mut r = WavReader { bytes, pos: 0 };
    if r.take(4, "RIFF tag")? != b"RIFF" {
        return Err(Error::Format {
            offset: 0,
            message: "not a RIFF file".into(),
        });
    }
    let _riff_size = r.u32_le("RIFF size")?;
    if r.take(4, "WAVE tag")? != b"WAVE" {
        return Err(Error::Format {
            offset: 8,
            message: "not a WAVE file".into(),
        });
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    while r.pos + 8 <= bytes.len() {
        let id_offset = r.pos;
        let chunk_id: [u8; 4] = r.take(4, "chunk id")?.try_into().unwrap();
        let chunk_size = r.u32_le("chunk size")? as usize;
        let payload = r.take(chunk_size, "chunk payload")?;
        match &chunk_id {
            b"fmt " => {
                if chunk_size < 16 {
                    return Err(Error::Format {
                        offset: id_offset as u64,
                        message: "fmt chunk too small".into(),
                    });
                }
                let format = u16::from_le_bytes(payload[0..2].try_into().unwrap());
                let channels = u16::from_le_bytes(payload[2..4].try_into().unwrap());
                let rate = u32::from_le_bytes(payload[4..8].try_into().unwrap());
                let bits = u16::from_le_bytes(payload[14..16].try_into().unwrap());
                fmt = Some((format, channels, rate, bits));
            }
            b"data" => data = Some(payload),
            _ => {} // skip LIST, fact, ...
        }
        // Chunks are word-aligned.
        if chunk_size % 2 == 1 && r.pos < bytes.len() {
            r.pos += 1;
        }
    }

    let (format, channels, rate, bits) = fmt.ok_or(Error::Format {
        offset: bytes.len() as u64,
        message: "missing fmt chunk".into(),
    })?;
    let data = data.ok_or(Error::Format {
        offset: bytes.len() as u64,
        message: "missing data chunk".into(),
    })?;
    if format != 1 || bits != 16 {
        return Err(Error::Format {
            offset: 20,
            message: format!("unsupported codec: format {format}, {bits}-bit (need PCM 16-bit)"),
        });
    }
    if channels == 0 || channels > 2 {
        return Err(Error::Format {
            offset: 22,
            message: format!("unsupported channel count {channels}"),
        });
    }
    if rate != 16_000 && rate != 48_000 {
        return Err(Error::Format {
            offset: 24,
            message: format!("unsupported sample rate {rate} (need 16000 or 48000)"),
        });
    }
    let n_ch = channels as usize;
    if data.len() % (2 * n_ch) != 0 {
        return Err(Error::Format {
            offset: bytes.len() as u64,
            message: "data chunk length is not a whole number of frames".into(),
        });
    }
    let n_samples = data.len() / (2 * n_ch);
    let mut out = vec![Vec::with_capacity(n_samples); n_ch];
    for (i, frame) in data.chunks_exact(2 * n_ch).enumerate() {
        let _ = i;
        for (c, ch) in out.iter_mut().enumerate() {
            ch.push(i16::from_le_bytes(frame[2 * c..2 * c + 2].try_into().unwrap()));
        }
    }
    Ok(ParsedWav {
        channels: out,
        sample_rate: rate,
    })
}

/// Read a stereo (or mono, duplicated with a flag) PCM-16 WAV at 16 or
/// 48 kHz. 48 kHz input is low-pass decimated by 3; samples are scaled to
/// `[-1, 1]`.
pub fn read_wav<S: Scalar>(path: &Path) -> Result<Waveform<S>> {
    let bytes = fs::read(path)?;
    let parsed = parse_wav(&bytes)?;
    let scale = 1.0 / 32768.0;
    let to_scalar = |samples: &[i16]| -> Vec<S> {
        samples
            .iter()
            .map(|&s| S::from(s as f64 * scale).unwrap())
            .collect()
    };
    let duplicated = parsed.channels.len() == 1;
    let left_raw = to_scalar(&parsed.channels[0]);
    let right_raw = if duplicated {
        left_raw.clone()
    } else {
        to_scalar(&parsed.channels[1])
    };
    let (left, right) = if parsed.sample_rate == 48_000 {
        (resample_3to1(&left_raw), resample_3to1(&right_raw))
    } else {
        (left_raw, right_raw)
    };
    let mut wave = Waveform::new(left, right, SAMPLE_RATE)?;
    wave.duplicated_mono = duplicated;
    Ok(wave)
}

/// Chunks are labeled as exactly 4 seconds: longer audio is truncated,
/// shorter audio rejected at ingestion (keeps every feature sequence at a
/// uniform 249 frames, no padding or masking anywhere downstream).
pub fn enforce_chunk_duration<S: Scalar>(
    mut wave: Waveform<S>,
    chunk_id: &str,
) -> Result<Waveform<S>> {
    let want = super::synth::CHUNK_SAMPLES;
    if wave.len() < want {
        return Err(Error::Data(format!(
            "chunk '{chunk_id}' is shorter than 4 s ({} samples)",
            wave.len()
        )));
    }
    wave.left.truncate(want);
    wave.right.truncate(want);
    Ok(wave)
}

/// Write a stereo PCM-16 WAV at the given rate. Samples are clamped to
/// `[-1, 1]` and quantized with a 32768 scale.
pub fn write_wav<S: Scalar>(path: &Path, left: &[S], right: &[S], sample_rate: u32) -> Result<()> {
    if left.len() != right.len() {
        return Err(Error::Data(format!(
            "channel length mismatch: {} vs {}",
            left.len(),
            right.len()
        )));
    }
    let n_samples = left.len();
    let data_len = (n_samples * 4) as u32;
    let mut bytes = Vec::with_capacity(44 + data_len as usize);
    bytes.extend_from_slice(b"RIFF");
    bytes.extend_from_slice(&(36 + data_len).to_le_bytes());
    bytes.extend_from_slice(b"WAVE");
    bytes.extend_from_slice(b"fmt ");
    bytes.extend_from_slice(&16u32.to_le_bytes());
    bytes.extend_from_slice(&1u16.to_le_bytes()); // PCM
    bytes.extend_from_slice(&2u16.to_le_bytes()); // stereo
    bytes.extend_from_slice(&sample_rate.to_le_bytes());
    bytes.extend_from_slice(&(sample_rate * 4).to_le_bytes()); // byte rate
    bytes.extend_from_slice(&4u16.to_le_bytes()); // block align
    bytes.extend_from_slice(&16u16.to_le_bytes()); // bits
    bytes.extend_from_slice(b"data");
    bytes.extend_from_slice(&data_len.to_le_bytes());
    let quantize = |v: S| -> i16 {
        let f = v.to_f64().unwrap().clamp(-1.0, 1.0);
        (f * 32768.0).round().clamp(-32768.0, 32767.0) as i16
    };
    for (l, r) in left.iter().zip(right) {
        bytes.extend_from_slice(&quantize(*l).to_le_bytes());
        bytes.extend_from_slice(&quantize(*r).to_le_bytes());
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}
