//! Seeded, portable random number generator (xoshiro256** seeded through
//! splitmix64). No global randomness anywhere in the crate: every stochastic
//! operation takes an explicit `Rng`, so a fixed seed reproduces the same
//! draw sequence — and therefore byte-identical tensors, datasets and
//! checkpoints — across runs and platforms.

use crate::scalar::Scalar;
use crate::tensor::Tensor2;

#[derive(Debug, Clone)]
pub struct Rng {
    state: [u64; 4],
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut x = seed;
        let mut next = || {
            x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = x;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^ (z >> 31)
        };
        Rng {
            state: [next(), next(), next(), next()],
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.state[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.state[1] << 17;
        self.state[2] ^= self.state[0];
        self.state[3] ^= self.state[1];
        self.state[1] ^= self.state[2];
        self.state[0] ^= self.state[3];
        self.state[2] ^= t;
        self.state[3] = self.state[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller (two fresh uniforms per draw).
    pub fn normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.uniform();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in `[0, n)` via the multiply-shift trick.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }

    /// Derive an independent sub-stream (for e.g. separating parameter
    /// initialization from batch shuffling).
    pub fn split(&mut self) -> Rng {
        Rng::new(self.next_u64())
    }

    pub fn uniform_tensor<S: Scalar>(
        &mut self,
        rows: usize,
        cols: usize,
        lo: f64,
        hi: f64,
    ) -> Tensor2<S> {
        Tensor2::from_fn(rows, cols, |_, _| {
            S::from(self.range(lo, hi)).expect("uniform draw fits scalar")
        })
    }

    pub fn normal_tensor<S: Scalar>(&mut self, rows: usize, cols: usize, std: f64) -> Tensor2<S> {
        Tensor2::from_fn(rows, cols, |_, _| {
            S::from(self.normal() * std).expect("normal draw fits scalar")
        })
    }
}
