//! Central finite differences, the oracle every analytic backward pass in
//! the model is checked against (always in 64-bit).

use crate::error::{Error, Result};
use crate::tensor::Tensor2;

/// Default step size for central differences.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Threshold used by the gradient test suite: worst relative error between
/// an analytic gradient and the finite-difference estimate.
pub const GRAD_TOLERANCE: f64 = 1e-5;

/// Element-wise central finite differences of a scalar function:
/// `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn finite_diff_grad<F>(f: F, x: &Tensor2<f64>, h: f64) -> Result<Tensor2<f64>>
where
    F: Fn(&Tensor2<f64>) -> Result<f64>,
{
    assert!(h > 0.0, "finite difference step must be positive");
    let mut probe = x.clone();
    let mut grad = Tensor2::zeros(x.rows(), x.cols());
    for idx in 0..x.len() {
        let orig = probe.data()[idx];
        probe.data_mut()[idx] = orig + h;
        let fp = f(&probe)?;
        probe.data_mut()[idx] = orig - h;
        let fm = f(&probe)?;
        probe.data_mut()[idx] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::numeric(
                "finite_diff_grad",
                format!("function returned non-finite value at element {idx}"),
            ));
        }
        grad.data_mut()[idx] = (fp - fm) / (2.0 * h);
    }
    Ok(grad)
}

/// Worst-case discrepancy `|a - n| / max(|a|, |n|, 1)` over all elements:
/// relative for large gradients, absolute below unit magnitude.
pub fn max_rel_error(analytic: &Tensor2<f64>, numeric: &Tensor2<f64>) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape());
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Like [`max_rel_error`] but also reports the flat index of the worst
/// element (for diagnostics in the gradcheck command).
pub fn max_rel_error_indexed(analytic: &Tensor2<f64>, numeric: &Tensor2<f64>) -> (f64, usize) {
    assert_eq!(analytic.shape(), numeric.shape());
    let mut worst = (0.0, 0);
    for (idx, (a, n)) in analytic.data().iter().zip(numeric.data()).enumerate() {
        let err = (a - n).abs() / a.abs().max(n.abs()).max(1.0);
        if err > worst.0 {
            worst = (err, idx);
        }
    }
    worst
}
