//! Per-frame 1-D convolution with ReLU and global max pooling.
//!
//! Each of the `N` filters of length `F` is correlated with the
//! `M`-dimensional frame at every valid position; the ReLU of the best
//! position survives the pooling, so each filter contributes exactly one
//! value. The backward pass routes gradient only through each filter's
//! argmax position, and only where the pre-activation was positive.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{axpy, dot, Tensor2};

use super::config::ConvStreamConfig;

/// Learnable filters of one convolution stream. `weights` is `[N x F]`,
/// `bias` is `[1 x N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvFilters<S> {
    pub weights: Tensor2<S>,
    pub bias: Tensor2<S>,
}

impl<S: Scalar> ConvFilters<S> {
    pub fn zeros(cfg: &ConvStreamConfig) -> Self {
        ConvFilters {
            weights: Tensor2::zeros(cfg.n_filters, cfg.filter_len),
            bias: Tensor2::zeros(1, cfg.n_filters),
        }
    }

    pub fn n_filters(&self) -> usize {
        self.weights.rows()
    }

    pub fn filter_len(&self) -> usize {
        self.weights.cols()
    }
}

/// Pooling bookkeeping for one frame: per filter, the argmax position and
/// the pre-activation value there.
#[derive(Debug, Clone)]
pub struct ConvFrameCache<S> {
    pub argmax: Vec<u32>,
    pub preact: Vec<S>,
}

/// Forward pass over a single frame; returns the `N` pooled activations and
/// the cache consumed by [`conv1d_gmp_backward`].
pub fn conv1d_gmp_forward<S: Scalar>(
    frame: &[S],
    filters: &ConvFilters<S>,
) -> Result<(Vec<S>, ConvFrameCache<S>)> {
    let f_len = filters.filter_len();
    let m = frame.len();
    if f_len > m {
        return Err(Error::shape(
            "conv1d_gmp_forward",
            (1, m),
            filters.weights.shape(),
        ));
    }
    let n = filters.n_filters();
    let positions = m - f_len + 1;
    let mut pooled = vec![S::zero(); n];
    let mut argmax = vec![0u32; n];
    let mut preact = vec![S::zero(); n];
    let bias = filters.bias.row(0);
    for i in 0..n {
        let w = filters.weights.row(i);
        // Scan positions in ascending order with a strict comparison, so
        // ties resolve to the lowest index.
        let mut best = dot(w, &frame[0..f_len]) + bias[i];
        let mut best_j = 0usize;
        for j in 1..positions {
            let c = dot(w, &frame[j..j + f_len]) + bias[i];
            if c > best {
                best = c;
                best_j = j;
            }
        }
        argmax[i] = best_j as u32;
        preact[i] = best;
        pooled[i] = if best > S::zero() { best } else { S::zero() };
    }
    Ok((pooled, ConvFrameCache { argmax, preact }))
}

/// Backward pass for one frame. Accumulates filter gradients into `grads`
/// and, when given, writes the input gradient into `grad_frame` (additive).
/// The input gradient is unused when the inputs are precomputed features
/// but is exercised by the gradient checks.
pub fn conv1d_gmp_backward<S: Scalar>(
    frame: &[S],
    filters: &ConvFilters<S>,
    cache: &ConvFrameCache<S>,
    upstream: &[S],
    grads: &mut ConvFilters<S>,
    mut grad_frame: Option<&mut [S]>,
) {
    let f_len = filters.filter_len();
    let n = filters.n_filters();
    debug_assert_eq!(upstream.len(), n);
    for i in 0..n {
        // ReLU subgradient is zero at and below zero.
        if cache.preact[i] <= S::zero() {
            continue;
        }
        let up = upstream[i];
        if up == S::zero() {
            continue;
        }
        let j = cache.argmax[i] as usize;
        axpy(grads.weights.row_mut(i), up, &frame[j..j + f_len]);
        grads.bias.row_mut(0)[i] += up;
        if let Some(gf) = grad_frame.as_deref_mut() {
            axpy(&mut gf[j..j + f_len], up, filters.weights.row(i));
        }
    }
}

/// Sequence-level cache: argmax and pre-activation per (frame, filter).
#[derive(Debug, Clone)]
pub struct ConvSeqCache<S> {
    pub argmax: Tensor2<S>,
    pub preact: Tensor2<S>,
}

/// Forward over all frames of a feature matrix `[T x M]`, producing the
/// pooled activations `[T x N]`.
pub fn conv_seq_forward<S: Scalar>(
    features: &Tensor2<S>,
    filters: &ConvFilters<S>,
) -> Result<(Tensor2<S>, ConvSeqCache<S>)> {
    let t_frames = features.rows();
    let n = filters.n_filters();
    let mut out = Tensor2::zeros(t_frames, n);
    let mut argmax = Tensor2::zeros(t_frames, n);
    let mut preact = Tensor2::zeros(t_frames, n);
    for t in 0..t_frames {
        let (pooled, cache) = conv1d_gmp_forward(features.row(t), filters)?;
        out.row_mut(t).copy_from_slice(&pooled);
        for i in 0..n {
            argmax.set(t, i, S::from(cache.argmax[i] as f64).unwrap());
            preact.set(t, i, cache.preact[i]);
        }
    }
    Ok((out, ConvSeqCache { argmax, preact }))
}

/// Backward over all frames; filter gradients accumulate across frames.
pub fn conv_seq_backward<S: Scalar>(
    features: &Tensor2<S>,
    filters: &ConvFilters<S>,
    cache: &ConvSeqCache<S>,
    upstream: &Tensor2<S>,
    grads: &mut ConvFilters<S>,
    mut grad_features: Option<&mut Tensor2<S>>,
) {
    let t_frames = features.rows();
    let n = filters.n_filters();
    for t in 0..t_frames {
        let frame_cache = ConvFrameCache {
            argmax: (0..n)
                .map(|i| cache.argmax.get(t, i).to_f64().unwrap() as u32)
                .collect(),
            preact: cache.preact.row(t).to_vec(),
        };
        let gf = grad_features.as_deref_mut().map(|g| g.row_mut(t));
        conv1d_gmp_backward(
            features.row(t),
            filters,
            &frame_cache,
            upstream.row(t),
            grads,
            gf,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{finite_diff_grad, max_rel_error, DEFAULT_STEP, GRAD_TOLERANCE};
    use crate::rng::Rng;

    fn filters_from(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> ConvFilters<f64> {
        let n = weights.len();
        ConvFilters {
            weights: Tensor2::from_rows(&weights).unwrap(),
            bias: Tensor2::from_vec(1, n, bias).unwrap(),
        }
    }

    #[test]
    fn constant_difference_filter() {
        let filters = filters_from(vec![vec![-1.0, 1.0]], vec![0.0]);
        let (pooled, _) = conv1d_gmp_forward(&[1.0, 2.0, 3.0, 4.0], &filters).unwrap();
        assert_eq!(pooled, vec![1.0]);
    }

    #[test]
    fn degenerate_pooling_window() {
        // F = M: a single position, so the output is relu(w . frame + b).
        let filters = filters_from(vec![vec![1.0, -2.0, 0.5]], vec![0.25]);
        let frame = [2.0, 1.0, 4.0];
        let (pooled, cache) = conv1d_gmp_forward(&frame, &filters).unwrap();
        let expected = (2.0 - 2.0 + 2.0 + 0.25f64).max(0.0);
        assert!((pooled[0] - expected).abs() < 1e-12);
        assert_eq!(cache.argmax[0], 0);
    }

    #[test]
    fn hand_enumerated_correlations() {
        // frame [1,-2,3,-1], filter [1,1]: correlations [-1, 1, 2], relu'd
        // [0, 1, 2], max 2.0 at position 2.
        let filters = filters_from(vec![vec![1.0, 1.0]], vec![0.0]);
        let (pooled, cache) = conv1d_gmp_forward(&[1.0, -2.0, 3.0, -1.0], &filters).unwrap();
        assert_eq!(pooled, vec![2.0]);
        assert_eq!(cache.argmax[0], 2);
    }

    #[test]
    fn zero_upstream_means_zero_gradients() {
        let mut rng = Rng::new(1);
        let filters = ConvFilters {
            weights: rng.uniform_tensor::<f64>(3, 4, -1.0, 1.0),
            bias: rng.uniform_tensor::<f64>(1, 3, -0.1, 0.1),
        };
        let frame: Vec<f64> = (0..10).map(|_| rng.range(-1.0, 1.0)).collect();
        let (_, cache) = conv1d_gmp_forward(&frame, &filters).unwrap();
        let mut grads = ConvFilters::zeros(&ConvStreamConfig::new(10, 4, 3));
        let mut grad_frame = vec![0.0; 10];
        conv1d_gmp_backward(
            &frame,
            &filters,
            &cache,
            &[0.0; 3],
            &mut grads,
            Some(&mut grad_frame),
        );
        assert!(grads.weights.data().iter().all(|&v| v == 0.0));
        assert!(grads.bias.data().iter().all(|&v| v == 0.0));
        assert!(grad_frame.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn degenerate_case_gradient_is_relu_masked_outer_product() {
        let filters = filters_from(vec![vec![1.0, 1.0, 1.0], vec![-1.0, -1.0, -1.0]], vec![0.0, 0.0]);
        let frame = [1.0, 2.0, 3.0];
        let (_, cache) = conv1d_gmp_forward(&frame, &filters).unwrap();
        let mut grads = ConvFilters::zeros(&ConvStreamConfig::new(3, 3, 2));
        conv1d_gmp_backward(&frame, &filters, &cache, &[0.5, 0.5], &mut grads, None);
        // Filter 0 is active (preact 6 > 0): grad = 0.5 * frame.
        assert_eq!(grads.weights.row(0), &[0.5, 1.0, 1.5]);
        assert_eq!(grads.bias.get(0, 0), 0.5);
        // Filter 1 is dead (preact -6): no gradient.
        assert!(grads.weights.row(1).iter().all(|&v| v == 0.0));
        assert_eq!(grads.bias.get(0, 1), 0.0);
    }

    #[test]
    fn pooling_is_permutation_invariant_for_unit_filters() {
        // With F = 1 the positions are individual feature values; permuting
        // them must not change the pooled maxima.
        let mut rng = Rng::new(3);
        let filters = ConvFilters {
            weights: rng.uniform_tensor::<f64>(4, 1, -1.0, 1.0),
            bias: rng.uniform_tensor::<f64>(1, 4, -0.2, 0.2),
        };
        let frame: Vec<f64> = (0..12).map(|_| rng.range(-1.0, 1.0)).collect();
        let (base, _) = conv1d_gmp_forward(&frame, &filters).unwrap();
        let mut permuted = frame.clone();
        rng.shuffle(&mut permuted);
        let (perm, _) = conv1d_gmp_forward(&permuted, &filters).unwrap();
        for (a, b) in base.iter().zip(&perm) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::new(7);
        let cfg = ConvStreamConfig::new(9, 4, 3);
        let weights = rng.uniform_tensor::<f64>(3, 4, -1.0, 1.0);
        let bias = rng.uniform_tensor::<f64>(1, 3, -0.3, 0.3);
        let frame_t = rng.uniform_tensor::<f64>(1, 9, -1.0, 1.0);
        // Random projection makes the output a scalar.
        let proj: Vec<f64> = (0..3).map(|_| rng.range(-1.0, 1.0)).collect();

        let loss = |w: &Tensor2<f64>, b: &Tensor2<f64>, fr: &Tensor2<f64>| -> f64 {
            let filters = ConvFilters {
                weights: w.clone(),
                bias: b.clone(),
            };
            let (pooled, _) = conv1d_gmp_forward(fr.row(0), &filters).unwrap();
            pooled.iter().zip(&proj).map(|(p, q)| p * q).sum()
        };

        let filters = ConvFilters {
            weights: weights.clone(),
            bias: bias.clone(),
        };
        let (_, cache) = conv1d_gmp_forward(frame_t.row(0), &filters).unwrap();
        let mut grads = ConvFilters::zeros(&cfg);
        let mut grad_frame = vec![0.0; 9];
        conv1d_gmp_backward(
            frame_t.row(0),
            &filters,
            &cache,
            &proj,
            &mut grads,
            Some(&mut grad_frame),
        );

        let fd_w =
            finite_diff_grad(|w| Ok(loss(w, &bias, &frame_t)), &weights, DEFAULT_STEP).unwrap();
        assert!(max_rel_error(&grads.weights, &fd_w) < GRAD_TOLERANCE);
        let fd_b = finite_diff_grad(|b| Ok(loss(&weights, b, &frame_t)), &bias, DEFAULT_STEP).unwrap();
        assert!(max_rel_error(&grads.bias, &fd_b) < GRAD_TOLERANCE);
        let fd_f =
            finite_diff_grad(|fr| Ok(loss(&weights, &bias, fr)), &frame_t, DEFAULT_STEP).unwrap();
        let grad_frame_t = Tensor2::from_vec(1, 9, grad_frame).unwrap();
        assert!(max_rel_error(&grad_frame_t, &fd_f) < GRAD_TOLERANCE);
    }
}
