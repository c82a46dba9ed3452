//! Parameter initialization: Glorot-uniform input projections, orthogonal
//! recurrent matrices (QR of a Gaussian draw), zero biases.

use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// Uniform in `[-limit, limit]` with `limit = sqrt(6 / (fan_in + fan_out))`.
/// Rows are the output dimension, columns the input dimension.
pub fn glorot_uniform<S: Scalar>(rng: &mut Rng, rows: usize, cols: usize) -> Tensor2<S> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    rng.uniform_tensor(rows, cols, -limit, limit)
}

/// Random orthogonal matrix: Householder QR of a standard normal draw, with
/// column signs fixed by the R diagonal so the distribution is uniform over
/// the orthogonal group. Computed in f64 and cast down.
pub fn orthogonal<S: Scalar>(rng: &mut Rng, n: usize) -> Tensor2<S> {
    let a = rng.normal_tensor::<f64>(n, n, 1.0);
    let (q, r_diag) = householder_qr(&a);
    let mut out = Tensor2::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let sign = if r_diag[j] < 0.0 { -1.0 } else { 1.0 };
            out.set(i, j, S::from(q.get(i, j) * sign).unwrap());
        }
    }
    out
}

/// Householder QR returning the explicit Q and the diagonal of R.
fn householder_qr(a: &Tensor2<f64>) -> (Tensor2<f64>, Vec<f64>) {
    let n = a.rows();
    let mut r = a.clone();
    let mut q = Tensor2::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 });

    for k in 0..n {
        // Householder vector for column k below the diagonal.
        let mut norm = 0.0;
        for i in k..n {
            norm += r.get(i, k) * r.get(i, k);
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r.get(k, k) > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n];
        v[k] = r.get(k, k) - alpha;
        for i in k + 1..n {
            v[i] = r.get(i, k);
        }
        let v_norm_sq: f64 = v[k..].iter().map(|x| x * x).sum();
        if v_norm_sq == 0.0 {
            continue;
        }

        // r <- (I - 2 v v^T / v^T v) r
        for j in k..n {
            let mut dot = 0.0;
            for i in k..n {
                dot += v[i] * r.get(i, j);
            }
            let coeff = 2.0 * dot / v_norm_sq;
            for i in k..n {
                r.set(i, j, r.get(i, j) - coeff * v[i]);
            }
        }
        // q <- q (I - 2 v v^T / v^T v)
        for i in 0..n {
            let mut dot = 0.0;
            for j in k..n {
                dot += q.get(i, j) * v[j];
            }
            let coeff = 2.0 * dot / v_norm_sq;
            for j in k..n {
                q.set(i, j, q.get(i, j) - coeff * v[j]);
            }
        }
    }
    let r_diag = (0..n).map(|i| r.get(i, i)).collect();
    (q, r_diag)
}
