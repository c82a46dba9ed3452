//! Gated recurrent unit: single-step cell and whole-sequence kernels with
//! hand-written backpropagation through time.
//!
//! The cell computes
//!
//! ```text
//! r_t = sigmoid(Wr x_t + Rr h_{t-1} + br)
//! z_t = sigmoid(Wz x_t + Rz h_{t-1} + bz)
//! g_t = tanh(Wh x_t + r_t (*) (Rh h_{t-1}) + bh)
//! h_t = z_t (*) h_{t-1} + (1 - z_t) (*) g_t
//! ```
//!
//! where the reset gate multiplies the recurrent term *after* the `Rh`
//! product, and the update gate weights the previous state (so with all-zero
//! weights `h_t = 0.5 h_{t-1}` exactly). The `simple` cell variant keeps
//! only the candidate path: `h_t = tanh(Wh x_t + Rh h_{t-1} + bh)`.
//!
//! The sequence kernels batch the input projections of all frames into
//! matrix products and produce bitwise-identical results to stepping the
//! cell, because every reduction runs in the same order.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Gru,
    Simple,
}

/// Weights of one recurrent cell. Input projections `W*` are `[H x D]`,
/// recurrent projections `R*` are `[H x H]`, biases are `[1 x H]`. The
/// `simple` cell uses only the `*h` group.
#[derive(Debug, Clone, PartialEq)]
pub struct GruWeights<S> {
    pub wr: Tensor2<S>,
    pub wz: Tensor2<S>,
    pub wh: Tensor2<S>,
    pub rr: Tensor2<S>,
    pub rz: Tensor2<S>,
    pub rh: Tensor2<S>,
    pub br: Tensor2<S>,
    pub bz: Tensor2<S>,
    pub bh: Tensor2<S>,
}

impl<S: Scalar> GruWeights<S> {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        GruWeights {
            wr: Tensor2::zeros(hidden, input),
            wz: Tensor2::zeros(hidden, input),
            wh: Tensor2::zeros(hidden, input),
            rr: Tensor2::zeros(hidden, hidden),
            rz: Tensor2::zeros(hidden, hidden),
            rh: Tensor2::zeros(hidden, hidden),
            br: Tensor2::zeros(1, hidden),
            bz: Tensor2::zeros(1, hidden),
            bh: Tensor2::zeros(1, hidden),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.wh.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.wh.cols()
    }
}

#[inline]
fn sigmoid<S: Scalar>(x: S) -> S {
    S::one() / (S::one() + (-x).exp())
}

/// Everything the backward pass needs about one step.
#[derive(Debug, Clone)]
pub struct GruStepCache<S> {
    pub x: Vec<S>,
    pub h_prev: Vec<S>,
    pub r: Vec<S>,
    pub z: Vec<S>,
    /// Candidate activation `g_t`.
    pub cand: Vec<S>,
    /// The recurrent product `Rh h_{t-1}` before the reset gate.
    pub rh_h: Vec<S>,
    pub kind: CellKind,
}

/// One step of the recurrent cell.
pub fn gru_cell_forward<S: Scalar>(
    x: &[S],
    h_prev: &[S],
    w: &GruWeights<S>,
    kind: CellKind,
) -> Result<(Vec<S>, GruStepCache<S>)> {
    let h_dim = w.hidden_dim();
    let d = w.input_dim();
    if x.len() != d || h_prev.len() != h_dim {
        return Err(Error::shape(
            "gru_cell_forward",
            (x.len(), h_prev.len()),
            (d, h_dim),
        ));
    }
    let one = S::one();
    let mut rh_h = vec![S::zero(); h_dim];
    w.rh.mul_vec(h_prev, &mut rh_h);

    match kind {
        CellKind::Simple => {
            let mut a = vec![S::zero(); h_dim];
            w.wh.mul_vec(x, &mut a);
            let bh = w.bh.row(0);
            let mut h = vec![S::zero(); h_dim];
            for i in 0..h_dim {
                h[i] = (a[i] + rh_h[i] + bh[i]).tanh();
            }
            let cache = GruStepCache {
                x: x.to_vec(),
                h_prev: h_prev.to_vec(),
                r: Vec::new(),
                z: Vec::new(),
                cand: h.clone(),
                rh_h,
                kind,
            };
            Ok((h, cache))
        }
        CellKind::Gru => {
            let mut ar = vec![S::zero(); h_dim];
            let mut az = vec![S::zero(); h_dim];
            let mut ah = vec![S::zero(); h_dim];
            w.wr.mul_vec(x, &mut ar);
            w.wz.mul_vec(x, &mut az);
            w.wh.mul_vec(x, &mut ah);
            let mut rr_h = vec![S::zero(); h_dim];
            let mut rz_h = vec![S::zero(); h_dim];
            w.rr.mul_vec(h_prev, &mut rr_h);
            w.rz.mul_vec(h_prev, &mut rz_h);
            let (br, bz, bh) = (w.br.row(0), w.bz.row(0), w.bh.row(0));

            let mut r = vec![S::zero(); h_dim];
            let mut z = vec![S::zero(); h_dim];
            let mut cand = vec![S::zero(); h_dim];
            let mut h = vec![S::zero(); h_dim];
            for i in 0..h_dim {
                r[i] = sigmoid(ar[i] + rr_h[i] + br[i]);
                z[i] = sigmoid(az[i] + rz_h[i] + bz[i]);
                cand[i] = (ah[i] + r[i] * rh_h[i] + bh[i]).tanh();
                h[i] = z[i] * h_prev[i] + (one - z[i]) * cand[i];
            }
            let cache = GruStepCache {
                x: x.to_vec(),
                h_prev: h_prev.to_vec(),
                r,
                z,
                cand,
                rh_h,
                kind,
            };
            Ok((h, cache))
        }
    }
}

/// Gradients of one step with respect to the inputs and every weight,
/// given the loss gradient at `h_t`. Weight gradients accumulate into
/// `grads`.
pub fn gru_cell_backward<S: Scalar>(
    w: &GruWeights<S>,
    cache: &GruStepCache<S>,
    grad_h: &[S],
    grads: &mut GruWeights<S>,
) -> (Vec<S>, Vec<S>) {
    let h_dim = w.hidden_dim();
    let d = w.input_dim();
    let one = S::one();
    let mut grad_x = vec![S::zero(); d];
    let mut grad_h_prev = vec![S::zero(); h_dim];

    match cache.kind {
        CellKind::Simple => {
            // h = tanh(a); da = dh (1 - h^2)
            let mut da = vec![S::zero(); h_dim];
            for i in 0..h_dim {
                da[i] = grad_h[i] * (one - cache.cand[i] * cache.cand[i]);
            }
            grads.wh.add_outer(&da, &cache.x);
            grads.rh.add_outer(&da, &cache.h_prev);
            for (g, &v) in grads.bh.row_mut(0).iter_mut().zip(&da) {
                *g += v;
            }
            w.wh.mul_vec_t_accum(&da, &mut grad_x);
            w.rh.mul_vec_t_accum(&da, &mut grad_h_prev);
        }
        CellKind::Gru => {
            let (r, z, cand, rh_h, h_prev) =
                (&cache.r, &cache.z, &cache.cand, &cache.rh_h, &cache.h_prev);
            let mut da_h = vec![S::zero(); h_dim];
            let mut da_z = vec![S::zero(); h_dim];
            let mut da_r = vec![S::zero(); h_dim];
            let mut da_h_r = vec![S::zero(); h_dim];
            for i in 0..h_dim {
                let d_cand = grad_h[i] * (one - z[i]);
                let dz = grad_h[i] * (h_prev[i] - cand[i]);
                da_h[i] = d_cand * (one - cand[i] * cand[i]);
                da_z[i] = dz * z[i] * (one - z[i]);
                let dr = da_h[i] * rh_h[i];
                da_r[i] = dr * r[i] * (one - r[i]);
                da_h_r[i] = da_h[i] * r[i];
                grad_h_prev[i] = grad_h[i] * z[i];
            }
            grads.wr.add_outer(&da_r, &cache.x);
            grads.wz.add_outer(&da_z, &cache.x);
            grads.wh.add_outer(&da_h, &cache.x);
            grads.rr.add_outer(&da_r, h_prev);
            grads.rz.add_outer(&da_z, h_prev);
            grads.rh.add_outer(&da_h_r, h_prev);
            for i in 0..h_dim {
                grads.br.row_mut(0)[i] += da_r[i];
                grads.bz.row_mut(0)[i] += da_z[i];
                grads.bh.row_mut(0)[i] += da_h[i];
            }
            w.wr.mul_vec_t_accum(&da_r, &mut grad_x);
            w.wz.mul_vec_t_accum(&da_z, &mut grad_x);
            w.wh.mul_vec_t_accum(&da_h, &mut grad_x);
            w.rr.mul_vec_t_accum(&da_r, &mut grad_h_prev);
            w.rz.mul_vec_t_accum(&da_z, &mut grad_h_prev);
            w.rh.mul_vec_t_accum(&da_h_r, &mut grad_h_prev);
        }
    }
    (grad_x, grad_h_prev)
}

/// Per-sequence cache for the batched kernels. Rows are in iteration order
/// (the caller reverses the input for the backward direction of a
/// bidirectional layer).
#[derive(Debug, Clone)]
pub struct GruSeqCache<S> {
    /// `h_all.row(t)` is the state *before* step `t`; row `T` is the final
    /// state.
    pub h_all: Tensor2<S>,
    pub r: Tensor2<S>,
    pub z: Tensor2<S>,
    pub cand: Tensor2<S>,
    pub rh_h: Tensor2<S>,
    pub kind: CellKind,
}

/// Run the cell over a whole sequence `[T x D]` starting from `h_0 = 0`,
/// returning the hidden states `[T x H]`.
pub fn gru_seq_forward<S: Scalar>(
    x: &Tensor2<S>,
    w: &GruWeights<S>,
    kind: CellKind,
) -> Result<(Tensor2<S>, GruSeqCache<S>)> {
    let t_len = x.rows();
    if t_len == 0 {
        return Err(Error::Data("empty sequence".into()));
    }
    let h_dim = w.hidden_dim();
    if x.cols() != w.input_dim() {
        return Err(Error::shape("gru_seq_forward", x.shape(), w.wh.shape()));
    }
    let one = S::one();

    // Input projections for all frames at once.
    let gx_h = x.matmul_nt(&w.wh)?;
    let (gx_r, gx_z) = if kind == CellKind::Gru {
        (x.matmul_nt(&w.wr)?, x.matmul_nt(&w.wz)?)
    } else {
        (Tensor2::zeros(0, 0), Tensor2::zeros(0, 0))
    };

    let mut out = Tensor2::zeros(t_len, h_dim);
    let mut h_all = Tensor2::zeros(t_len + 1, h_dim);
    let mut r_m = Tensor2::zeros(t_len, h_dim);
    let mut z_m = Tensor2::zeros(t_len, h_dim);
    let mut cand_m = Tensor2::zeros(t_len, h_dim);
    let mut rh_h_m = Tensor2::zeros(t_len, h_dim);

    let mut h = vec![S::zero(); h_dim];
    let mut rh_h = vec![S::zero(); h_dim];
    let mut rr_h = vec![S::zero(); h_dim];
    let mut rz_h = vec![S::zero(); h_dim];
    let (br, bz, bh) = (w.br.row(0), w.bz.row(0), w.bh.row(0));

    for t in 0..t_len {
        h_all.row_mut(t).copy_from_slice(&h);
        w.rh.mul_vec(&h, &mut rh_h);
        rh_h_m.row_mut(t).copy_from_slice(&rh_h);
        match kind {
            CellKind::Simple => {
                let gx = gx_h.row(t);
                let cand_row = cand_m.row_mut(t);
                for i in 0..h_dim {
                    let v = (gx[i] + rh_h[i] + bh[i]).tanh();
                    cand_row[i] = v;
                    h[i] = v;
                }
            }
            CellKind::Gru => {
                w.rr.mul_vec(&h, &mut rr_h);
                w.rz.mul_vec(&h, &mut rz_h);
                let (gr, gz, gh) = (gx_r.row(t), gx_z.row(t), gx_h.row(t));
                for i in 0..h_dim {
                    let r = sigmoid(gr[i] + rr_h[i] + br[i]);
                    let z = sigmoid(gz[i] + rz_h[i] + bz[i]);
                    let cand = (gh[i] + r * rh_h[i] + bh[i]).tanh();
                    r_m.row_mut(t)[i] = r;
                    z_m.row_mut(t)[i] = z;
                    cand_m.row_mut(t)[i] = cand;
                    h[i] = z * h[i] + (one - z) * cand;
                }
            }
        }
        out.row_mut(t).copy_from_slice(&h);
    }
    h_all.row_mut(t_len).copy_from_slice(&h);

    Ok((
        out,
        GruSeqCache {
            h_all,
            r: r_m,
            z: z_m,
            cand: cand_m,
            rh_h: rh_h_m,
            kind,
        },
    ))
}

/// Backpropagation through time over the cached sequence. `grad_out` holds
/// the loss gradient at every frame's hidden state; weight gradients
/// accumulate into `grads`; the per-frame input gradient is returned.
pub fn gru_seq_backward<S: Scalar>(
    x: &Tensor2<S>,
    w: &GruWeights<S>,
    cache: &GruSeqCache<S>,
    grad_out: &Tensor2<S>,
    grads: &mut GruWeights<S>,
) -> Result<Tensor2<S>> {
    let t_len = x.rows();
    let h_dim = w.hidden_dim();
    let one = S::one();
    debug_assert_eq!(grad_out.shape(), (t_len, h_dim));

    // Stacked per-step pre-activation gradients, filled back-to-front, then
    // turned into weight gradients with three matrix products each.
    let mut da_h = Tensor2::zeros(t_len, h_dim);
    let mut da_r = Tensor2::zeros(t_len, h_dim);
    let mut da_z = Tensor2::zeros(t_len, h_dim);
    let mut da_h_r = Tensor2::zeros(t_len, h_dim);

    let mut carry = vec![S::zero(); h_dim];
    let mut tmp = vec![S::zero(); h_dim];
    for t in (0..t_len).rev() {
        let g_out = grad_out.row(t);
        match cache.kind {
            CellKind::Simple => {
                let cand = cache.cand.row(t);
                let da_row = da_h.row_mut(t);
                for i in 0..h_dim {
                    let dh = g_out[i] + carry[i];
                    da_row[i] = dh * (one - cand[i] * cand[i]);
                }
                tmp.iter_mut().for_each(|v| *v = S::zero());
                w.rh.mul_vec_t_accum(da_h.row(t), &mut tmp);
                carry.copy_from_slice(&tmp);
            }
            CellKind::Gru => {
                let (r, z, cand, rh_h) = (
                    cache.r.row(t),
                    cache.z.row(t),
                    cache.cand.row(t),
                    cache.rh_h.row(t),
                );
                let h_prev = cache.h_all.row(t);
                for i in 0..h_dim {
                    let dh = g_out[i] + carry[i];
                    let d_cand = dh * (one - z[i]);
                    let dz = dh * (h_prev[i] - cand[i]);
                    let dah = d_cand * (one - cand[i] * cand[i]);
                    da_h.row_mut(t)[i] = dah;
                    da_z.row_mut(t)[i] = dz * z[i] * (one - z[i]);
                    let dr = dah * rh_h[i];
                    da_r.row_mut(t)[i] = dr * r[i] * (one - r[i]);
                    da_h_r.row_mut(t)[i] = dah * r[i];
                    tmp[i] = dh * z[i];
                }
                w.rr.mul_vec_t_accum(da_r.row(t), &mut tmp);
                w.rz.mul_vec_t_accum(da_z.row(t), &mut tmp);
                w.rh.mul_vec_t_accum(da_h_r.row(t), &mut tmp);
                carry.copy_from_slice(&tmp);
            }
        }
    }

    // h_prev rows are h_all[0..T].
    let mut h_prev_rows = Tensor2::zeros(t_len, h_dim);
    for t in 0..t_len {
        h_prev_rows.row_mut(t).copy_from_slice(cache.h_all.row(t));
    }

    let mut grad_x = da_h.matmul(&w.wh)?;
    grads.wh.add_scaled(&da_h.matmul_tn(x)?, one);
    for (g, v) in grads.bh.row_mut(0).iter_mut().zip(da_h.col_sums()) {
        *g += v;
    }
    match cache.kind {
        CellKind::Simple => {
            // The recurrent product feeds the candidate un-gated.
            grads.rh.add_scaled(&da_h.matmul_tn(&h_prev_rows)?, one);
        }
        CellKind::Gru => {
            grads.rh.add_scaled(&da_h_r.matmul_tn(&h_prev_rows)?, one);
            grad_x.add_scaled(&da_r.matmul(&w.wr)?, one);
            grad_x.add_scaled(&da_z.matmul(&w.wz)?, one);
            grads.wr.add_scaled(&da_r.matmul_tn(x)?, one);
            grads.wz.add_scaled(&da_z.matmul_tn(x)?, one);
            grads.rr.add_scaled(&da_r.matmul_tn(&h_prev_rows)?, one);
            grads.rz.add_scaled(&da_z.matmul_tn(&h_prev_rows)?, one);
            for (g, v) in grads.br.row_mut(0).iter_mut().zip(da_r.col_sums()) {
                *g += v;
            }
            for (g, v) in grads.bz.row_mut(0).iter_mut().zip(da_z.col_sums()) {
                *g += v;
            }
        }
    }
    Ok(grad_x)
}
