//! Finite-difference verification of analytic gradients.

use crate::error::{Error, Result};
use crate::nn::param::Parameter;
use crate::scalar::Scalar;

/// A scalar-valued computation whose gradients can be checked.
///
/// The loss must be a deterministic function of the parameter values
/// (dropout and other stochastic pieces disabled).
pub trait DifferentiableLoss<S: Scalar> {
    /// Forward pass only.
    fn loss(&mut self) -> Result<S>;

    /// Forward and backward; leaves gradients accumulated in the parameters.
    fn loss_and_backward(&mut self) -> Result<S>;

    /// Every trainable parameter, in a stable order.
    fn parameters(&mut self) -> Vec<&mut Parameter<S>>;
}

pub const DEFAULT_STEP: f64 = 1e-5;

/// Compares analytic gradients against central finite differences with step
/// `h`; returns the worst relative error over all parameter coordinates.
pub fn gradient_check<T: DifferentiableLoss<f64>>(target: &mut T, h: f64) -> Result<f64> {
    for p in target.parameters() {
        p.zero_grad();
    }
    let loss = target.loss_and_backward()?;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("non-finite loss {loss}")));
    }
    let analytic: Vec<Vec<f64>> = target
        .parameters()
        .iter()
        .map(|p| p.grad.data().to_vec())
        .collect();

    let mut worst = 0.0f64;
    for (pi, grads) in analytic.iter().enumerate() {
        for idx in 0..grads.len() {
            let original = {
                let params = target.parameters();
                params[pi].value.data()[idx]
            };
            set_coord(target, pi, idx, original + h);
            let plus = target.loss()?;
            set_coord(target, pi, idx, original - h);
            let minus = target.loss()?;
            set_coord(target, pi, idx, original);
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::Numeric(
                    "non-finite loss during finite differencing".into(),
                ));
            }
            let numeric = (plus - minus) / (2.0 * h);
            let a = grads[idx];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-4);
            if rel > worst {
                worst = rel;
            }
        }
    }
    Ok(worst)
}

fn set_coord<T: DifferentiableLoss<f64>>(target: &mut T, pi: usize, idx: usize, v: f64) {
    let mut params = target.parameters();
    params[pi].value.data_mut()[idx] = v;
}
