//! Per-frame feature extraction: the three basic feature types (mel
//! filterbank energies, log spectrogram, raw frames) computed on the
//! average of the two channels, and the three spatial features (ILD, IPD,
//! IMD) computed between the left and right channel spectra.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

use super::fft::{hann_window, Complex, FftPlan};
use super::framing::{frame_signal, FrameGrid};
use super::mel::build_mel_bank;

/// Ingestion sample rate; everything downstream assumes it.
pub const SAMPLE_RATE: u32 = 16_000;
pub const N_FFT: usize = 512;
pub const N_BINS: usize = 257;
pub const N_MELS: usize = 40;
/// Additive floor under the log compression of mel and spectrogram values.
pub const LOG_FLOOR: f64 = 1e-10;
/// Magnitude floor applied before level/phase ratios between channels.
pub const MAG_FLOOR: f64 = 1e-10;
/// Default mel band edges: the full Nyquist range.
pub const MEL_F_LO: f64 = 0.0;
pub const MEL_F_HI: f64 = 8000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Mfb40,
    Spec257,
    Raw512,
    Imd257,
    Ild257,
    Ipd257,
}

impl FeatureKind {
    pub fn dim(self) -> usize {
        match self {
            FeatureKind::Mfb40 => 40,
            FeatureKind::Spec257 | FeatureKind::Imd257 | FeatureKind::Ild257
            | FeatureKind::Ipd257 => 257,
            FeatureKind::Raw512 => 512,
        }
    }

    /// On-disk tag byte for the feature cache format.
    pub fn tag(self) -> u8 {
        match self {
            FeatureKind::Mfb40 => 0,
            FeatureKind::Spec257 => 1,
            FeatureKind::Raw512 => 2,
            FeatureKind::Imd257 => 3,
            FeatureKind::Ild257 => 4,
            FeatureKind::Ipd257 => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => FeatureKind::Mfb40,
            1 => FeatureKind::Spec257,
            2 => FeatureKind::Raw512,
            3 => FeatureKind::Imd257,
            4 => FeatureKind::Ild257,
            5 => FeatureKind::Ipd257,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Mfb40 => "mfb",
            FeatureKind::Spec257 => "spec",
            FeatureKind::Raw512 => "raw",
            FeatureKind::Imd257 => "imd",
            FeatureKind::Ild257 => "ild",
            FeatureKind::Ipd257 => "ipd",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "mfb" => FeatureKind::Mfb40,
            "spec" => FeatureKind::Spec257,
            "raw" => FeatureKind::Raw512,
            "imd" => FeatureKind::Imd257,
            "ild" => FeatureKind::Ild257,
            "ipd" => FeatureKind::Ipd257,
            other => return Err(Error::Config(format!("unknown feature kind '{other}'"))),
        })
    }
}

/// The basic (mono) feature families the model can be trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasicKind {
    Mfb,
    Spec,
    Raw,
}

impl BasicKind {
    pub fn feature_kind(self) -> FeatureKind {
        match self {
            BasicKind::Mfb => FeatureKind::Mfb40,
            BasicKind::Spec => FeatureKind::Spec257,
            BasicKind::Raw => FeatureKind::Raw512,
        }
    }

    pub fn dim(self) -> usize {
        self.feature_kind().dim()
    }

    /// Per-family convolution filter length (30 / 200 / 400).
    pub fn default_filter_len(self) -> usize {
        match self {
            BasicKind::Mfb => 30,
            BasicKind::Spec => 200,
            BasicKind::Raw => 400,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BasicKind::Mfb => "mfb",
            BasicKind::Spec => "spec",
            BasicKind::Raw => "raw",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "mfb" => BasicKind::Mfb,
            "spec" => BasicKind::Spec,
            "raw" => BasicKind::Raw,
            other => return Err(Error::Config(format!("unknown basic feature '{other}'"))),
        })
    }
}

/// One stereo recording at the ingestion rate.
#[derive(Debug, Clone)]
pub struct Waveform<S> {
    pub left: Vec<S>,
    pub right: Vec<S>,
    pub sample_rate: u32,
    /// Set when a mono file was duplicated onto both channels, so callers
    /// can warn that spatial features will be zero.
    pub duplicated_mono: bool,
}

impl<S: Scalar> Waveform<S> {
    pub fn new(left: Vec<S>, right: Vec<S>, sample_rate: u32) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::Data(format!(
                "channel length mismatch: {} vs {}",
                left.len(),
                right.len()
            )));
        }
        if sample_rate != SAMPLE_RATE {
            return Err(Error::Data(format!(
                "waveform must be at {SAMPLE_RATE} Hz after ingestion, got {sample_rate}"
            )));
        }
        Ok(Waveform {
            left,
            right,
            sample_rate,
            duplicated_mono: false,
        })
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    /// Sample-wise average of the two channels (the mono merging convention
    /// used for the basic features).
    pub fn mono_average(&self) -> Vec<S> {
        let half = S::from(0.5).unwrap();
        self.left
            .iter()
            .zip(&self.right)
            .map(|(&l, &r)| (l + r) * half)
            .collect()
    }
}

/// Time-major matrix of per-frame features for one chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence<S> {
    pub kind: FeatureKind,
    pub data: Tensor2<S>,
}

impl<S: Scalar> FeatureSequence<S> {
    pub fn new(kind: FeatureKind, data: Tensor2<S>) -> Result<Self> {
        if data.cols() != kind.dim() {
            return Err(Error::Config(format!(
                "feature dim {} does not match kind {} (expected {})",
                data.cols(),
                kind.name(),
                kind.dim()
            )));
        }
        Ok(FeatureSequence { kind, data })
    }

    pub fn n_frames(&self) -> usize {
        self.data.rows()
    }
}

/// Complex one-sided spectrogram, time-major.
#[derive(Debug, Clone)]
pub struct ComplexSpectrogram<S> {
    pub n_frames: usize,
    pub n_bins: usize,
    data: Vec<Complex<S>>,
}

impl<S: Scalar> ComplexSpectrogram<S> {
    /// Build from row-major complex bins (`n_frames * n_bins` values).
    pub fn from_rows(n_frames: usize, data: Vec<Complex<S>>) -> Self {
        assert_eq!(data.len() % n_frames.max(1), 0);
        let n_bins = data.len().checked_div(n_frames).unwrap_or(0);
        ComplexSpectrogram {
            n_frames,
            n_bins,
            data,
        }
    }

    pub fn row(&self, t: usize) -> &[Complex<S>] {
        &self.data[t * self.n_bins..(t + 1) * self.n_bins]
    }
}

/// Left and right channel complex spectra of a stereo chunk.
#[derive(Debug, Clone)]
pub struct StereoSpectrum<S> {
    pub left: ComplexSpectrogram<S>,
    pub right: ComplexSpectrogram<S>,
}

impl<S: Scalar> StereoSpectrum<S> {
    pub fn n_frames(&self) -> usize {
        self.left.n_frames
    }
}

fn spectrogram_of<S: Scalar>(
    channel: &[S],
    grid: &FrameGrid,
    plan: &FftPlan<S>,
    window: &[S],
) -> Result<ComplexSpectrogram<S>> {
    let frames = frame_signal(channel, grid)?;
    let n_frames = frames.rows();
    let mut data = Vec::with_capacity(n_frames * N_BINS);
    let mut buf = vec![Complex::zero(); N_FFT];
    for t in 0..n_frames {
        for ((b, &x), &w) in buf.iter_mut().zip(frames.row(t)).zip(window) {
            *b = Complex::new(x * w, S::zero());
        }
        plan.forward(&mut buf);
        data.extend_from_slice(&buf[..N_BINS]);
    }
    Ok(ComplexSpectrogram {
        n_frames,
        n_bins: N_BINS,
        data,
    })
}

/// Hann-windowed STFT of both channels on the default 32 ms / 16 ms grid.
pub fn stereo_spectrum<S: Scalar>(wave: &Waveform<S>) -> Result<StereoSpectrum<S>> {
    let grid = FrameGrid::default_16k();
    let plan = FftPlan::new(N_FFT);
    let window = hann_window::<S>(N_FFT);
    Ok(StereoSpectrum {
        left: spectrogram_of(&wave.left, &grid, &plan, &window)?,
        right: spectrogram_of(&wave.right, &grid, &plan, &window)?,
    })
}

/// Per-dimension mean / standard deviation computed on the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization<S> {
    pub mean: Vec<S>,
    pub std: Vec<S>,
}

impl<S: Scalar> Normalization<S> {
    pub fn identity(dim: usize) -> Self {
        Normalization {
            mean: vec![S::zero(); dim],
            std: vec![S::one(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Normalize a feature matrix in place using the `[offset, offset+cols)`
    /// slice of the statistics.
    pub fn apply_slice(&self, data: &mut Tensor2<S>, offset: usize) {
        let cols = data.cols();
        debug_assert!(offset + cols <= self.dim());
        let mean = &self.mean[offset..offset + cols];
        let std = &self.std[offset..offset + cols];
        for r in 0..data.rows() {
            for ((v, &m), &s) in data.row_mut(r).iter_mut().zip(mean).zip(std) {
                *v = (*v - m) / s;
            }
        }
    }
}

/// Column means and standard deviations over a set of feature matrices.
/// Standard deviations are floored at 1e-6 so constant dimensions stay
/// finite.
pub fn compute_normalization<'a, S: Scalar + 'a>(
    matrices: impl Iterator<Item = &'a Tensor2<S>> + Clone,
    dim: usize,
) -> Normalization<S> {
    let mut count: u64 = 0;
    let mut sum = vec![0.0f64; dim];
    let mut sum_sq = vec![0.0f64; dim];
    for m in matrices {
        debug_assert_eq!(m.cols(), dim);
        for r in 0..m.rows() {
            for (c, &v) in m.row(r).iter().enumerate() {
                let v = v.to_f64().unwrap();
                sum[c] += v;
                sum_sq[c] += v * v;
            }
            count += 1;
        }
    }
    let n = (count as f64).max(1.0);
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std: Vec<S> = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| S::from((sq / n - m * m).max(0.0).sqrt().max(1e-6)).unwrap())
        .collect();
    Normalization {
        mean: mean.into_iter().map(|m| S::from(m).unwrap()).collect(),
        std,
    }
}

/// Extract one basic feature sequence from the channel average:
///
/// * `mfb`  — `log(mel_bank * |X|^2 + floor)` per frame,
/// * `spec` — `log(|X| + floor)` per frame,
/// * `raw`  — the unwindowed frame samples themselves.
///
/// When `norm` is supplied its leading `dim` entries are applied
/// per-dimension (training-set statistics); the training and evaluation
/// pipelines extract raw features and let the model apply the checkpoint
/// statistics instead.
pub fn extract_basic<S: Scalar>(
    wave: &Waveform<S>,
    kind: BasicKind,
    norm: Option<&Normalization<S>>,
) -> Result<FeatureSequence<S>> {
    let grid = FrameGrid::default_16k();
    let mono = wave.mono_average();
    let mut data = match kind {
        BasicKind::Raw => frame_signal(&mono, &grid)?,
        BasicKind::Spec => {
            let plan = FftPlan::new(N_FFT);
            let window = hann_window::<S>(N_FFT);
            let spec = spectrogram_of(&mono, &grid, &plan, &window)?;
            let floor = S::from(LOG_FLOOR).unwrap();
            Tensor2::from_fn(spec.n_frames, N_BINS, |t, k| {
                (spec.row(t)[k].abs() + floor).ln()
            })
        }
        BasicKind::Mfb => {
            let plan = FftPlan::new(N_FFT);
            let window = hann_window::<S>(N_FFT);
            let spec = spectrogram_of(&mono, &grid, &plan, &window)?;
            let bank = build_mel_bank::<S>(N_MELS, N_FFT, SAMPLE_RATE, MEL_F_LO, MEL_F_HI)?;
            let mut power = Tensor2::zeros(spec.n_frames, N_BINS);
            for t in 0..spec.n_frames {
                for (p, c) in power.row_mut(t).iter_mut().zip(spec.row(t)) {
                    *p = c.re * c.re + c.im * c.im;
                }
            }
            // [T x 257] * [257 x 40_bank^T]
            let mel = power.matmul_nt(&bank)?;
            let floor = S::from(LOG_FLOOR).unwrap();
            mel.map(|v| (v + floor).ln())
        }
    };
    if let Some(norm) = norm {
        if norm.dim() < kind.dim() {
            return Err(Error::Config(format!(
                "normalization has {} dims, feature needs {}",
                norm.dim(),
                kind.dim()
            )));
        }
        norm.apply_slice(&mut data, 0);
    }
    FeatureSequence::new(kind.feature_kind(), data)
}

/// Interaural level difference in dB:
/// `20 log10(max(|X_l|, floor) / max(|X_r|, floor))`.
pub fn compute_ild<S: Scalar>(spec: &StereoSpectrum<S>) -> FeatureSequence<S> {
    let floor = S::from(MAG_FLOOR).unwrap();
    let twenty = S::from(20.0).unwrap();
    let data = Tensor2::from_fn(spec.n_frames(), N_BINS, |t, k| {
        let l = spec.left.row(t)[k].abs().max(floor);
        let r = spec.right.row(t)[k].abs().max(floor);
        twenty * (l / r).log10()
    });
    FeatureSequence {
        kind: FeatureKind::Ild257,
        data,
    }
}

/// Interaural phase difference: the angle of `X_l / X_r` wrapped to
/// `(-pi, pi]`, zero where either magnitude is below the floor.
pub fn compute_ipd<S: Scalar>(spec: &StereoSpectrum<S>) -> FeatureSequence<S> {
    let floor = S::from(MAG_FLOOR).unwrap();
    let data = Tensor2::from_fn(spec.n_frames(), N_BINS, |t, k| {
        let l = spec.left.row(t)[k];
        let r = spec.right.row(t)[k];
        if l.abs() < floor || r.abs() < floor {
            S::zero()
        } else {
            // angle(l / r) = angle(l * conj(r)). atan2 returns [-pi, pi];
            // fold the -pi branch (negative-zero imaginary part on the
            // negative real axis) onto +pi for the (-pi, pi] convention.
            let angle = (l * r.conj()).arg();
            if angle == -S::from(std::f64::consts::PI).unwrap() {
                -angle
            } else {
                angle
            }
        }
    });
    FeatureSequence {
        kind: FeatureKind::Ipd257,
        data,
    }
}

/// Interaural magnitude difference, linear domain: `|X_l| - |X_r|`.
pub fn compute_imd<S: Scalar>(spec: &StereoSpectrum<S>) -> FeatureSequence<S> {
    let data = Tensor2::from_fn(spec.n_frames(), N_BINS, |t, k| {
        spec.left.row(t)[k].abs() - spec.right.row(t)[k].abs()
    });
    FeatureSequence {
        kind: FeatureKind::Imd257,
        data,
    }
}

/// Extract any feature kind (dispatcher used by the cache-building command).
pub fn extract_kind<S: Scalar>(wave: &Waveform<S>, kind: FeatureKind) -> Result<FeatureSequence<S>> {
    match kind {
        FeatureKind::Mfb40 => extract_basic(wave, BasicKind::Mfb, None),
        FeatureKind::Spec257 => extract_basic(wave, BasicKind::Spec, None),
        FeatureKind::Raw512 => extract_basic(wave, BasicKind::Raw, None),
        FeatureKind::Imd257 => Ok(compute_imd(&stereo_spectrum(wave)?)),
        FeatureKind::Ild257 => Ok(compute_ild(&stereo_spectrum(wave)?)),
        FeatureKind::Ipd257 => Ok(compute_ipd(&stereo_spectrum(wave)?)),
    }
}
