//! Binary cross-entropy over the independent per-tag sigmoid outputs.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probabilities are clamped to `[eps, 1 - eps]` inside the logs.
pub const BCE_EPS: f64 = 1e-7;

/// Loss and gradient for one example:
///
/// `E = -sum_k [ t_k ln p_k + (1 - t_k) ln(1 - p_k) ]`
///
/// The returned gradient is with respect to the pre-sigmoid outputs `O`,
/// which for this loss is simply `p - t`. Batch totals are sums over
/// examples.
pub fn bce_loss<S: Scalar>(probs: &[S], targets: &[S]) -> Result<(S, Vec<S>)> {
    if probs.len() != targets.len() {
        return Err(Error::shape(
            "bce_loss",
            (1, probs.len()),
            (1, targets.len()),
        ));
    }
    let zero = S::zero();
    let one = S::one();
    for &t in targets {
        if t != zero && t != one {
            return Err(Error::Label(format!(
                "reference values must be 0 or 1, got {t}"
            )));
        }
    }
    let eps = S::from(BCE_EPS).unwrap();
    let hi = one - eps;
    let mut loss = S::zero();
    let mut grad = Vec::with_capacity(probs.len());
    for (&p, &t) in probs.iter().zip(targets) {
        if !p.is_finite() {
            return Err(Error::numeric("bce_loss", "non-finite posterior"));
        }
        let pc = p.max(eps).min(hi);
        loss -= t * pc.ln() + (one - t) * (one - pc).ln();
        grad.push(p - t);
    }
    Ok((loss, grad))
}
