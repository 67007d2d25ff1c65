//! Stateless differentiable operations: linear map, ReLU, dropout.
//!
//! Each forward returns the output plus whatever context its backward needs;
//! each backward consumes that context, accumulates parameter gradients, and
//! returns the gradient with respect to its input.

use crate::error::{Error, Result};
use crate::nn::param::Parameter;
use crate::nn::tensor::Tensor;
use crate::rng::Rng;
use crate::scalar::Scalar;

/// Fully connected layer, optionally with a bias row.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<S: Scalar> {
    pub weight: Parameter<S>,
    pub bias: Option<Parameter<S>>,
}

/// Input snapshot needed by [`Linear::backward`].
#[derive(Debug)]
pub struct LinearCtx<S: Scalar> {
    input: Tensor<S>,
}

impl<S: Scalar> Linear<S> {
    pub fn new(weight: Tensor<S>, bias: Option<Tensor<S>>) -> Self {
        Linear {
            weight: Parameter::new(weight),
            bias: bias.map(Parameter::new),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn forward(&self, input: &Tensor<S>) -> Result<(Tensor<S>, LinearCtx<S>)> {
        if input.cols() != self.in_dim() {
            return Err(Error::InvalidInput(format!(
                "linear layer expects {} input columns, got {}",
                self.in_dim(),
                input.cols()
            )));
        }
        let mut out = input.matmul(&self.weight.value);
        if let Some(bias) = &self.bias {
            for i in 0..out.rows() {
                for (o, &b) in out.row_mut(i).iter_mut().zip(bias.value.row(0)) {
                    *o += b;
                }
            }
        }
        Ok((
            out,
            LinearCtx {
                input: input.clone(),
            },
        ))
    }

    /// Accumulates weight/bias gradients and returns d(loss)/d(input).
    pub fn backward(&mut self, ctx: &LinearCtx<S>, dout: &Tensor<S>) -> Tensor<S> {
        let dweight = ctx.input.matmul_transpose_self(dout);
        self.weight.grad.add_assign(&dweight);
        if let Some(bias) = &mut self.bias {
            for i in 0..dout.rows() {
                for (g, &d) in bias.grad.row_mut(0).iter_mut().zip(dout.row(i)) {
                    *g += d;
                }
            }
        }
        dout.matmul_transpose_other(&self.weight.value)
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter<S>> {
        let mut params = vec![&mut self.weight];
        if let Some(bias) = &mut self.bias {
            params.push(bias);
        }
        params
    }
}

/// Elementwise max(0, x).
pub fn relu_forward<S: Scalar>(input: &Tensor<S>) -> Tensor<S> {
    input.map(|v| if v > S::zero() { v } else { S::zero() })
}

/// Routes gradient through the entries that were positive in the forward pass.
pub fn relu_backward<S: Scalar>(output: &Tensor<S>, dout: &Tensor<S>) -> Tensor<S> {
    let mut dx = dout.clone();
    for (d, &o) in dx.data_mut().iter_mut().zip(output.data()) {
        if o <= S::zero() {
            *d = S::zero();
        }
    }
    dx
}

/// Inverted dropout: kept entries are scaled by 1/(1−p) at train time so
/// evaluation is a plain identity.
pub fn dropout_forward<S: Scalar>(
    input: &Tensor<S>,
    p: f64,
    train_mode: bool,
    rng: &mut Rng,
) -> (Tensor<S>, Option<Tensor<S>>) {
    if !train_mode || p == 0.0 {
        return (input.clone(), None);
    }
    let keep = S::from_f64_lossy(1.0 - p);
    let mut mask = Tensor::zeros(input.rows(), input.cols());
    for m in mask.data_mut() {
        *m = if rng.next_bool(1.0 - p) {
            S::one() / keep
        } else {
            S::zero()
        };
    }
    let mut out = input.clone();
    for (o, &m) in out.data_mut().iter_mut().zip(mask.data()) {
        *o *= m;
    }
    (out, Some(mask))
}

pub fn dropout_backward<S: Scalar>(mask: &Option<Tensor<S>>, dout: &Tensor<S>) -> Tensor<S> {
    match mask {
        None => dout.clone(),
        Some(mask) => {
            let mut dx = dout.clone();
            for (d, &m) in dx.data_mut().iter_mut().zip(mask.data()) {
                *d *= m;
            }
            dx
        }
    }
}
