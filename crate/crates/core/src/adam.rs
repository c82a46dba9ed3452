//! Adam optimizer state and update rule.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

#[derive(Debug, Clone)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0
            || !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || self.epsilon <= 0.0
        {
            return Err(Error::Config(format!(
                "invalid adam config: lr={} beta1={} beta2={} eps={}",
                self.learning_rate, self.beta1, self.beta2, self.epsilon
            )));
        }
        Ok(())
    }
}

/// One named parameter tensor together with its gradient accumulator and
/// Adam moment estimates. All four tensors share one shape.
#[derive(Debug, Clone)]
pub struct ParamGroup<S> {
    pub name: String,
    pub value: Tensor2<S>,
    pub grad: Tensor2<S>,
    pub adam_m: Tensor2<S>,
    pub adam_v: Tensor2<S>,
    pub step_count: u64,
}

impl<S: Scalar> ParamGroup<S> {
    pub fn new(name: impl Into<String>, value: Tensor2<S>) -> Self {
        let (rows, cols) = value.shape();
        ParamGroup {
            name: name.into(),
            value,
            grad: Tensor2::zeros(rows, cols),
            adam_m: Tensor2::zeros(rows, cols),
            adam_v: Tensor2::zeros(rows, cols),
            step_count: 0,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(S::zero());
    }

    /// Apply one bias-corrected Adam update from the accumulated gradient.
    /// The caller zeroes the gradient afterwards.
    pub fn adam_step(&mut self, cfg: &AdamConfig) -> Result<()> {
        adam_update(
            &self.name,
            &mut self.value,
            &self.grad,
            &mut self.adam_m,
            &mut self.adam_v,
            &mut self.step_count,
            cfg,
        )
    }
}

/// The Adam update rule on raw tensors; `ParamGroup::adam_step` and the
/// trainer both go through here.
pub fn adam_update<S: Scalar>(
    name: &str,
    value: &mut Tensor2<S>,
    grad: &Tensor2<S>,
    adam_m: &mut Tensor2<S>,
    adam_v: &mut Tensor2<S>,
    step_count: &mut u64,
    cfg: &AdamConfig,
) -> Result<()> {
    if value.shape() != grad.shape() {
        return Err(Error::shape("adam_step", value.shape(), grad.shape()));
    }
    grad.ensure_finite(&format!("adam_step gradient for '{name}'"))?;

    *step_count += 1;
    let t = *step_count as i32;
    let lr = S::from(cfg.learning_rate).unwrap();
    let b1 = S::from(cfg.beta1).unwrap();
    let b2 = S::from(cfg.beta2).unwrap();
    let eps = S::from(cfg.epsilon).unwrap();
    let one = S::one();
    // Bias-correction denominators are scalars; compute once per step.
    let bc1 = S::from(1.0 - cfg.beta1.powi(t)).unwrap();
    let bc2 = S::from(1.0 - cfg.beta2.powi(t)).unwrap();

    let g = grad.data();
    let m = adam_m.data_mut();
    let v = adam_v.data_mut();
    let w = value.data_mut();
    for i in 0..g.len() {
        m[i] = b1 * m[i] + (one - b1) * g[i];
        v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        w[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_magnitude_is_learning_rate() {
        // At step 1 the bias correction gives m_hat = g and v_hat = g^2, so
        // the update is lr * g / (|g| + eps) which is lr in magnitude.
        let mut group = ParamGroup::new("w", Tensor2::from_vec(1, 1, vec![0.0f64]).unwrap());
        group.grad.set(0, 0, 0.5);
        group.adam_step(&AdamConfig::default()).unwrap();
        let delta = group.value.get(0, 0);
        assert!((delta + 1e-3).abs() < 1e-8, "got {delta}");
        assert_eq!(group.step_count, 1);
    }

    #[test]
    fn zero_gradient_never_changes_values() {
        let mut group =
            ParamGroup::new("w", Tensor2::from_vec(2, 2, vec![1.0f64, -2.0, 3.0, 0.5]).unwrap());
        let before = group.value.clone();
        for _ in 0..25 {
            group.adam_step(&AdamConfig::default()).unwrap();
        }
        assert_eq!(group.value, before);
    }

    #[test]
    fn converges_on_scalar_quadratic_and_matches_reference() {
        // Independent scalar transcription of the update rule, run alongside
        // the implementation on f(w) = (w - 3)^2.
        let cfg = AdamConfig {
            learning_rate: 0.1,
            ..Default::default()
        };
        let mut group = ParamGroup::new("w", Tensor2::from_vec(1, 1, vec![0.0f64]).unwrap());
        let (mut w_ref, mut m_ref, mut v_ref) = (0.0f64, 0.0f64, 0.0f64);
        for t in 1..=100 {
            let g = 2.0 * (group.value.get(0, 0) - 3.0);
            group.grad.set(0, 0, g);
            group.adam_step(&cfg).unwrap();
            group.zero_grad();

            let g_ref = 2.0 * (w_ref - 3.0);
            m_ref = cfg.beta1 * m_ref + (1.0 - cfg.beta1) * g_ref;
            v_ref = cfg.beta2 * v_ref + (1.0 - cfg.beta2) * g_ref * g_ref;
            let m_hat = m_ref / (1.0 - cfg.beta1.powi(t));
            let v_hat = v_ref / (1.0 - cfg.beta2.powi(t));
            w_ref -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            assert!((group.value.get(0, 0) - w_ref).abs() < 1e-12);
        }
        assert!(
            (group.value.get(0, 0) - 3.0).abs() < 0.5,
            "after 100 steps w = {}",
            group.value.get(0, 0)
        );
    }

    #[test]
    fn non_finite_gradient_names_the_group() {
        let mut group = ParamGroup::new("gru0.fwd.wr", Tensor2::from_vec(1, 1, vec![0.0f64]).unwrap());
        group.grad.set(0, 0, f64::NAN);
        let err = group.adam_step(&AdamConfig::default()).unwrap_err();
        assert!(err.to_string().contains("gru0.fwd.wr"), "{err}");
        assert!(err.is_numeric());
    }
}
