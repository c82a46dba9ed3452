//! Minimal complex arithmetic and an iterative radix-2 FFT, enough for
//! 512-point short-time analysis. Twiddle factors are computed in f64 and
//! cast to the working scalar, so the f64 instantiation is exact to
//! machine precision.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex<S> {
    pub re: S,
    pub im: S,
}

impl<S: Scalar> Complex<S> {
    #[inline]
    pub fn new(re: S, im: S) -> Self {
        Complex { re, im }
    }

    #[inline]
    pub fn zero() -> Self {
        Complex {
            re: S::zero(),
            im: S::zero(),
        }
    }

    #[inline]
    pub fn conj(self) -> Self {
        Complex::new(self.re, -self.im)
    }

    #[inline]
    pub fn scale(self, s: S) -> Self {
        Complex::new(self.re * s, self.im * s)
    }

    /// Magnitude, via hypot for stability.
    #[inline]
    pub fn abs(self) -> S {
        self.re.hypot(self.im)
    }

    /// Phase angle in `(-pi, pi]`.
    #[inline]
    pub fn arg(self) -> S {
        self.im.atan2(self.re)
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl<S: Scalar> Add for Complex<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Complex::new(self.re + o.re, self.im + o.im)
    }
}

impl<S: Scalar> Sub for Complex<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Complex::new(self.re - o.re, self.im - o.im)
    }
}

impl<S: Scalar> Mul for Complex<S> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Complex::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

/// Precomputed twiddle table for a fixed power-of-two size.
#[derive(Debug, Clone)]
pub struct FftPlan<S> {
    n: usize,
    // twiddle[k] = exp(-2 pi i k / n) for k in 0..n/2
    twiddle: Vec<Complex<S>>,
}

impl<S: Scalar> FftPlan<S> {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two() && n >= 2, "FFT size must be a power of two");
        let twiddle = (0..n / 2)
            .map(|k| {
                let angle = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Complex::new(
                    S::from(angle.cos()).unwrap(),
                    S::from(angle.sin()).unwrap(),
                )
            })
            .collect();
        FftPlan { n, twiddle }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place decimation-in-time forward FFT.
    pub fn forward(&self, buf: &mut [Complex<S>]) {
        assert_eq!(buf.len(), self.n);
        let n = self.n;
        let shift = n.leading_zeros() + 1;
        for i in 0..n {
            let j = i.reverse_bits() >> shift;
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let stride = n / len;
            let half = len / 2;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddle[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }

    /// FFT of a real signal, returning the one-sided spectrum
    /// (`n/2 + 1` bins).
    pub fn forward_real(&self, signal: &[S]) -> Vec<Complex<S>> {
        assert_eq!(signal.len(), self.n);
        let mut buf: Vec<Complex<S>> = signal
            .iter()
            .map(|&v| Complex::new(v, S::zero()))
            .collect();
        self.forward(&mut buf);
        buf.truncate(self.n / 2 + 1);
        buf
    }
}

/// Periodic Hann window of length `n`.
pub fn hann_window<S: Scalar>(n: usize) -> Vec<S> {
    (0..n)
        .map(|i| {
            let w = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos());
            S::from(w).unwrap()
        })
        .collect()
}

/// One-sided spectrum of a single Hann-windowed analysis frame. Frame
/// length must equal the FFT size (512 in the default configuration);
/// bin `k` holds frequency `k * sample_rate / n_fft`.
pub fn stft_frame<S: Scalar>(frame: &[S], plan: &FftPlan<S>, window: &[S]) -> Result<Vec<Complex<S>>> {
    if frame.len() != plan.len() || window.len() != plan.len() {
        return Err(Error::shape(
            "stft_frame",
            (1, frame.len()),
            (1, plan.len()),
        ));
    }
    let windowed: Vec<S> = frame.iter().zip(window).map(|(&x, &w)| x * w).collect();
    Ok(plan.forward_real(&windowed))
}
