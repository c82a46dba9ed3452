//! Stacked (optionally bidirectional) recurrent layers. Each layer emits
//! the concatenation `[forward h_t || backward h_t]` per frame; the next
//! layer consumes that sequence.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

use super::gru::{gru_seq_backward, gru_seq_forward, CellKind, GruSeqCache, GruWeights};

/// Weights of one stack layer; `bwd` is absent for a unidirectional model.
#[derive(Debug, Clone, PartialEq)]
pub struct BiGruLayer<S> {
    pub fwd: GruWeights<S>,
    pub bwd: Option<GruWeights<S>>,
}

impl<S: Scalar> BiGruLayer<S> {
    pub fn zeros(hidden: usize, input: usize, bidirectional: bool) -> Self {
        BiGruLayer {
            fwd: GruWeights::zeros(hidden, input),
            bwd: bidirectional.then(|| GruWeights::zeros(hidden, input)),
        }
    }

    pub fn output_dim(&self) -> usize {
        self.fwd.hidden_dim() * if self.bwd.is_some() { 2 } else { 1 }
    }
}

#[derive(Debug, Clone)]
pub struct StackCache<S> {
    /// Input sequence of each layer (layer 0's input is the conv output).
    pub layer_inputs: Vec<Tensor2<S>>,
    /// Per layer: forward-direction cache and, when bidirectional, the
    /// backward-direction cache over the time-reversed input.
    pub dir_caches: Vec<(GruSeqCache<S>, Option<GruSeqCache<S>>)>,
}

/// Run the stack over `seq` (`[T x D]`, `h_0 = 0` in both directions).
/// Returns the top layer's per-frame outputs `[T x H]` or `[T x 2H]`.
pub fn bigru_stack_forward<S: Scalar>(
    seq: &Tensor2<S>,
    layers: &[BiGruLayer<S>],
    kind: CellKind,
) -> Result<(Tensor2<S>, StackCache<S>)> {
    if seq.rows() == 0 {
        return Err(Error::Data("empty sequence fed to recurrent stack".into()));
    }
    let mut layer_inputs = Vec::with_capacity(layers.len());
    let mut dir_caches = Vec::with_capacity(layers.len());
    let mut current = seq.clone();
    for layer in layers {
        let t_len = current.rows();
        let h = layer.fwd.hidden_dim();
        let (out_fwd, cache_fwd) = gru_seq_forward(&current, &layer.fwd, kind)?;
        let (output, cache_bwd) = match &layer.bwd {
            Some(w_bwd) => {
                let reversed = current.reverse_rows();
                let (out_bwd_rev, cache_bwd) = gru_seq_forward(&reversed, w_bwd, kind)?;
                let mut output = Tensor2::zeros(t_len, 2 * h);
                for t in 0..t_len {
                    let row = output.row_mut(t);
                    row[..h].copy_from_slice(out_fwd.row(t));
                    // Backward direction ran over reversed time; its step
                    // t_len-1-t corresponds to natural frame t.
                    row[h..].copy_from_slice(out_bwd_rev.row(t_len - 1 - t));
                }
                (output, Some(cache_bwd))
            }
            None => (out_fwd, None),
        };
        layer_inputs.push(current);
        dir_caches.push((cache_fwd, cache_bwd));
        current = output;
    }
    Ok((
        current,
        StackCache {
            layer_inputs,
            dir_caches,
        },
    ))
}

/// Backward through the stack; weight gradients accumulate into `grads`
/// (same layout as the weights). Returns the gradient at the stack input.
pub fn bigru_stack_backward<S: Scalar>(
    layers: &[BiGruLayer<S>],
    cache: &StackCache<S>,
    grad_out: &Tensor2<S>,
    grads: &mut [BiGruLayer<S>],
) -> Result<Tensor2<S>> {
    debug_assert_eq!(layers.len(), grads.len());
    let mut upstream = grad_out.clone();
    for l in (0..layers.len()).rev() {
        let layer = &layers[l];
        let (cache_fwd, cache_bwd) = &cache.dir_caches[l];
        let input = &cache.layer_inputs[l];
        let t_len = input.rows();
        let h = layer.fwd.hidden_dim();

        let grad_input = match (&layer.bwd, cache_bwd) {
            (Some(w_bwd), Some(cache_bwd)) => {
                let mut up_fwd = Tensor2::zeros(t_len, h);
                let mut up_bwd_rev = Tensor2::zeros(t_len, h);
                for t in 0..t_len {
                    let row = upstream.row(t);
                    up_fwd.row_mut(t).copy_from_slice(&row[..h]);
                    up_bwd_rev.row_mut(t_len - 1 - t).copy_from_slice(&row[h..]);
                }
                let grad_in_fwd =
                    gru_seq_backward(input, &layer.fwd, cache_fwd, &up_fwd, &mut grads[l].fwd)?;
                let reversed_input = input.reverse_rows();
                let grads_bwd = grads[l].bwd.as_mut().expect("grads mirror layer layout");
                let grad_in_bwd_rev =
                    gru_seq_backward(&reversed_input, w_bwd, cache_bwd, &up_bwd_rev, grads_bwd)?;
                let mut grad_input = grad_in_fwd;
                let grad_in_bwd = grad_in_bwd_rev.reverse_rows();
                grad_input.add_scaled(&grad_in_bwd, S::one());
                grad_input
            }
            _ => gru_seq_backward(input, &layer.fwd, cache_fwd, &upstream, &mut grads[l].fwd)?,
        };
        upstream = grad_input;
    }
    Ok(upstream)
}
