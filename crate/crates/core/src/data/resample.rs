//! 48 kHz -> 16 kHz decimation: windowed-sinc low-pass (cutoff at 0.9 of
//! the new Nyquist, 127 taps, Blackman window, unit DC gain) followed by
//! keeping every third sample, with the linear-phase group delay
//! compensated.

use crate::scalar::Scalar;

pub const DECIMATION_TAPS: usize = 127;
/// Cutoff in Hz at the 48 kHz input rate: 0.9 * 8000.
pub const DECIMATION_CUTOFF_HZ: f64 = 7200.0;
const INPUT_RATE: f64 = 48_000.0;

/// Blackman-windowed sinc low-pass prototype, normalized to unit gain at DC.
pub fn decimation_filter() -> Vec<f64> {
    let n = DECIMATION_TAPS;
    let fc = DECIMATION_CUTOFF_HZ / INPUT_RATE; // cycles per sample
    let center = (n - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..n)
        .map(|i| {
            let x = i as f64 - center;
            let sinc = if x == 0.0 {
                2.0 * fc
            } else {
                (2.0 * std::f64::consts::PI * fc * x).sin() / (std::f64::consts::PI * x)
            };
            let w = 0.42
                - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()
                + 0.08 * (4.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Filter and keep every third sample. Output length is `ceil(n / 3)`; the
/// filter delay of (taps-1)/2 input samples is compensated so output sample
/// `k` aligns with input sample `3k`.
pub fn resample_3to1<S: Scalar>(input: &[S]) -> Vec<S> {
    let taps: Vec<S> = decimation_filter()
        .into_iter()
        .map(|t| S::from(t).unwrap())
        .collect();
    let delay = (DECIMATION_TAPS - 1) / 2;
    let n = input.len();
    let out_len = n.div_ceil(3);
    let mut out = Vec::with_capacity(out_len);
    for k in 0..out_len {
        // y[3k + delay] of the causal convolution, i.e. the zero-phase
        // filter output at input index 3k.
        let center = 3 * k + delay;
        let mut acc = S::zero();
        for (i, &t) in taps.iter().enumerate() {
            // input index center - i, zero outside the signal
            if center >= i {
                let idx = center - i;
                if idx < n {
                    acc += t * input[idx];
                }
            }
        }
        out.push(acc);
    }
    out
}
