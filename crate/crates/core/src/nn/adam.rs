//! Adam optimizer with bias correction.

use crate::nn::param::Parameter;
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPS: f64 = 1e-8;

/// First/second moment estimates for one parameter list, plus the step count.
#[derive(Debug, Clone)]
pub struct AdamState<S: Scalar> {
    moments: Vec<(Tensor<S>, Tensor<S>)>,
    step: u64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new() -> Self {
        AdamState {
            moments: Vec::new(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

impl<S: Scalar> Default for AdamState<S> {
    fn default() -> Self {
        Self::new()
    }
}

/// One bias-corrected Adam update over the given parameters; gradients are
/// zeroed afterward. The parameter list must stay identical (same order and
/// shapes) across steps sharing a state.
pub fn adam_step<S: Scalar>(params: &mut [&mut Parameter<S>], state: &mut AdamState<S>, lr: f64) {
    if state.moments.is_empty() {
        state.moments = params
            .iter()
            .map(|p| {
                let (r, c) = p.shape();
                (Tensor::zeros(r, c), Tensor::zeros(r, c))
            })
            .collect();
    }
    assert_eq!(
        state.moments.len(),
        params.len(),
        "optimizer state does not match parameter list"
    );
    state.step += 1;
    let t = state.step as i32;
    let beta1 = S::from_f64_lossy(BETA1);
    let beta2 = S::from_f64_lossy(BETA2);
    let eps = S::from_f64_lossy(EPS);
    let lr_s = S::from_f64_lossy(lr);
    let bias1 = S::one() - S::from_f64_lossy(BETA1.powi(t));
    let bias2 = S::one() - S::from_f64_lossy(BETA2.powi(t));

    for (param, (m, v)) in params.iter_mut().zip(&mut state.moments) {
        assert_eq!(param.shape(), m.shape(), "parameter shape changed mid-run");
        for ((value, &grad), (m_i, v_i)) in param
            .value
            .data_mut()
            .iter_mut()
            .zip(param.grad.data())
            .zip(m.data_mut().iter_mut().zip(v.data_mut()))
        {
            *m_i = beta1 * *m_i + (S::one() - beta1) * grad;
            *v_i = beta2 * *v_i + (S::one() - beta2) * grad * grad;
            let m_hat = *m_i / bias1;
            let v_hat = *v_i / bias2;
            *value -= lr_s * m_hat / (v_hat.sqrt() + eps);
        }
        param.zero_grad();
    }
}
