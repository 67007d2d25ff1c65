//! Graph convolution layers.
//!
//! A layer computes `agg(H) · W` where `agg` is the kind-specific sparse
//! operator. None of the kinds carries a bias term; normalization and the
//! nonlinearity are applied by the enclosing block. For GIN the aggregation
//! is `(1+ε)·h_v + Σ_{u∈N(v)} h_u` with ε a trainable scalar starting at 0.

use crate::error::Result;
use crate::nn::param::Parameter;
use crate::nn::tensor::Tensor;
use crate::rng::Rng;
use crate::scalar::Scalar;

use super::agg::{AggKind, AggOp};

#[derive(Debug, Clone)]
pub struct GnnConv<S: Scalar> {
    pub kind: AggKind,
    pub weight: Parameter<S>,
    /// GIN self-loop scale; `None` for the other kinds.
    pub epsilon: Option<Parameter<S>>,
}

/// Intermediates a forward pass saves for the matching backward pass.
#[derive(Debug)]
pub struct GnnConvCtx<S: Scalar> {
    input: Tensor<S>,
    aggregated: Tensor<S>,
}

impl<S: Scalar> GnnConv<S> {
    pub fn new(kind: AggKind, in_dim: usize, out_dim: usize, rng: &mut Rng) -> GnnConv<S> {
        let weight = Parameter::new(crate::nn::init::glorot_uniform(in_dim, out_dim, rng));
        let epsilon = match kind {
            AggKind::Gin => Some(Parameter::new(Tensor::zeros(1, 1))),
            _ => None,
        };
        GnnConv {
            kind,
            weight,
            epsilon,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn forward(&self, agg: &AggOp<S>, h: &Tensor<S>) -> Result<(Tensor<S>, GnnConvCtx<S>)> {
        debug_assert_eq!(agg.kind(), self.kind);
        let mut aggregated = agg.apply(h)?;
        if let Some(eps) = &self.epsilon {
            let scale = S::one() + eps.value.get(0, 0);
            for (a, &x) in aggregated.data_mut().iter_mut().zip(h.data()) {
                *a += scale * x;
            }
        }
        let out = aggregated.matmul(&self.weight.value);
        let ctx = GnnConvCtx {
            input: h.clone(),
            aggregated,
        };
        Ok((out, ctx))
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(
        &mut self,
        agg: &AggOp<S>,
        ctx: &GnnConvCtx<S>,
        d_out: &Tensor<S>,
    ) -> Result<Tensor<S>> {
        self.weight
            .grad
            .add_assign(&ctx.aggregated.matmul_transpose_self(d_out));
        let d_agg = d_out.matmul_transpose_other(&self.weight.value);
        let mut d_h = agg.apply_transpose(&d_agg)?;
        if let Some(eps) = &mut self.epsilon {
            let scale = S::one() + eps.value.get(0, 0);
            let mut d_eps = S::zero();
            for ((dh, &da), &x) in d_h
                .data_mut()
                .iter_mut()
                .zip(d_agg.data())
                .zip(ctx.input.data())
            {
                *dh += scale * da;
                d_eps += da * x;
            }
            let prev = eps.grad.get(0, 0);
            eps.grad.set(0, 0, prev + d_eps);
        }
        Ok(d_h)
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter<S>> {
        let mut params = vec![&mut self.weight];
        if let Some(eps) = &mut self.epsilon {
            params.push(eps);
        }
        params
    }
}
