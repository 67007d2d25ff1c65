//! Weight initialization.

use crate::nn::tensor::Tensor;
use crate::rng::Rng;
use crate::scalar::Scalar;

/// Glorot-uniform initialization: entries drawn from
/// U(−√(6/(fan_in + fan_out)), +√(6/(fan_in + fan_out))).
pub fn glorot_uniform<S: Scalar>(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Tensor<S> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut t = Tensor::zeros(fan_in, fan_out);
    for v in t.data_mut() {
        *v = S::from_f64_lossy((2.0 * rng.next_f64() - 1.0) * limit);
    }
    t
}
