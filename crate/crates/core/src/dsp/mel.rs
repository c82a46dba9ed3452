//! Triangular mel filterbank construction.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// HTK mel scale.
pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters with centers equally spaced on the mel scale between
/// `f_lo` and `f_hi`. Returns `[n_mels x (n_fft/2 + 1)]`; each row is
/// non-negative with a single peak.
pub fn build_mel_bank<S: Scalar>(
    n_mels: usize,
    n_fft: usize,
    sample_rate: u32,
    f_lo: f64,
    f_hi: f64,
) -> Result<Tensor2<S>> {
    let nyquist = sample_rate as f64 / 2.0;
    if !(0.0..nyquist).contains(&f_lo) || f_hi <= f_lo || f_hi > nyquist {
        return Err(Error::Config(format!(
            "invalid mel band edges: f_lo={f_lo} f_hi={f_hi} nyquist={nyquist}"
        )));
    }
    if n_mels == 0 || n_fft < 2 {
        return Err(Error::Config(format!(
            "invalid mel bank size: n_mels={n_mels} n_fft={n_fft}"
        )));
    }

    let n_bins = n_fft / 2 + 1;
    let mel_lo = hz_to_mel(f_lo);
    let mel_hi = hz_to_mel(f_hi);
    // n_mels + 2 edge points; triangle i spans edges[i] .. edges[i+2] with
    // its peak at edges[i+1].
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();

    let bin_hz = sample_rate as f64 / n_fft as f64;
    let mut bank = Tensor2::zeros(n_mels, n_bins);
    for m in 0..n_mels {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        let row = bank.row_mut(m);
        for (k, w) in row.iter_mut().enumerate() {
            let f = k as f64 * bin_hz;
            let weight = if f <= center {
                (f - left) / (center - left)
            } else {
                (right - f) / (right - center)
            };
            if weight > 0.0 {
                *w = S::from(weight).unwrap();
            }
        }
    }
    Ok(bank)
}

/// Center frequencies in Hz of each filter (for inspection and tests).
pub fn mel_centers(n_mels: usize, f_lo: f64, f_hi: f64) -> Vec<f64> {
    let mel_lo = hz_to_mel(f_lo);
    let mel_hi = hz_to_mel(f_hi);
    (1..=n_mels)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect()
}
