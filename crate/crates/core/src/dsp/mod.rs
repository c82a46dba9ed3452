//! Signal processing: framing, STFT, mel filterbank, basic and spatial
//! feature extraction, and the on-disk feature cache.

pub mod cache;
pub mod features;
pub mod fft;
pub mod framing;
pub mod mel;

pub use features::{
    compute_ild, compute_imd, compute_ipd, compute_normalization, extract_basic, extract_kind,
    stereo_spectrum, BasicKind, FeatureKind, FeatureSequence, Normalization, StereoSpectrum,
    Waveform, LOG_FLOOR, MAG_FLOOR, N_BINS, N_FFT, N_MELS, SAMPLE_RATE,
};
pub use fft::{hann_window, stft_frame, Complex, FftPlan};
pub use framing::{frame_signal, FrameGrid};
pub use mel::build_mel_bank;
