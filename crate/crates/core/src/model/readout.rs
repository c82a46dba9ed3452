//! Feed-forward readout: one ReLU hidden layer into the per-tag sigmoid
//! outputs.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// `hidden` is `[H x D_gru]`, `out` is `[n_tags x H]`; biases are row
/// vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutWeights<S> {
    pub hidden: Tensor2<S>,
    pub hidden_bias: Tensor2<S>,
    pub out: Tensor2<S>,
    pub out_bias: Tensor2<S>,
}

impl<S: Scalar> ReadoutWeights<S> {
    pub fn zeros(hidden_dim: usize, input_dim: usize, n_tags: usize) -> Self {
        ReadoutWeights {
            hidden: Tensor2::zeros(hidden_dim, input_dim),
            hidden_bias: Tensor2::zeros(1, hidden_dim),
            out: Tensor2::zeros(n_tags, hidden_dim),
            out_bias: Tensor2::zeros(1, n_tags),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden.rows()
    }

    pub fn n_tags(&self) -> usize {
        self.out.rows()
    }
}

#[derive(Debug, Clone)]
pub struct ReadoutCache<S> {
    pub input: Vec<S>,
    /// Hidden pre-activations (for the ReLU mask).
    pub pre_hidden: Vec<S>,
    pub hidden_act: Vec<S>,
    pub probs: Vec<S>,
}

/// Forward: `probs = sigmoid(W_out relu(W_h g + b_h) + b_out)`.
pub fn readout_forward<S: Scalar>(
    input: &[S],
    w: &ReadoutWeights<S>,
) -> Result<(Vec<S>, ReadoutCache<S>)> {
    if input.len() != w.input_dim() {
        return Err(Error::shape(
            "readout_forward",
            (1, input.len()),
            w.hidden.shape(),
        ));
    }
    let h_dim = w.hidden_dim();
    let n_tags = w.n_tags();
    let mut pre_hidden = vec![S::zero(); h_dim];
    w.hidden.mul_vec(input, &mut pre_hidden);
    for (p, &b) in pre_hidden.iter_mut().zip(w.hidden_bias.row(0)) {
        *p += b;
    }
    let hidden_act: Vec<S> = pre_hidden
        .iter()
        .map(|&v| if v > S::zero() { v } else { S::zero() })
        .collect();
    let mut logits = vec![S::zero(); n_tags];
    w.out.mul_vec(&hidden_act, &mut logits);
    let probs: Vec<S> = logits
        .iter()
        .zip(w.out_bias.row(0))
        .map(|(&o, &b)| S::one() / (S::one() + (-(o + b)).exp()))
        .collect();
    let cache = ReadoutCache {
        input: input.to_vec(),
        pre_hidden,
        hidden_act,
        probs: probs.clone(),
    };
    Ok((probs, cache))
}

/// Backward from the gradient at the pre-sigmoid outputs `O` (for binary
/// cross-entropy that is `probs - targets`). Accumulates into `grads` and
/// returns the gradient at the readout input.
pub fn readout_backward<S: Scalar>(
    w: &ReadoutWeights<S>,
    cache: &ReadoutCache<S>,
    grad_logits: &[S],
    grads: &mut ReadoutWeights<S>,
) -> Vec<S> {
    let h_dim = w.hidden_dim();
    grads.out.add_outer(grad_logits, &cache.hidden_act);
    for (g, &v) in grads.out_bias.row_mut(0).iter_mut().zip(grad_logits) {
        *g += v;
    }
    let mut grad_hidden = vec![S::zero(); h_dim];
    w.out.mul_vec_t_accum(grad_logits, &mut grad_hidden);
    for (gh, &pre) in grad_hidden.iter_mut().zip(&cache.pre_hidden) {
        if pre <= S::zero() {
            *gh = S::zero();
        }
    }
    grads.hidden.add_outer(&grad_hidden, &cache.input);
    for (g, &v) in grads.hidden_bias.row_mut(0).iter_mut().zip(&grad_hidden) {
        *g += v;
    }
    let mut grad_input = vec![S::zero(); w.input_dim()];
    w.hidden.mul_vec_t_accum(&grad_hidden, &mut grad_input);
    grad_input
}
