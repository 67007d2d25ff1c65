//! Trainable parameter: a value tensor paired with its gradient accumulator.

use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter<S: Scalar> {
    pub value: Tensor<S>,
    pub grad: Tensor<S>,
}

impl<S: Scalar> Parameter<S> {
    pub fn new(value: Tensor<S>) -> Self {
        let grad = Tensor::zeros(value.rows(), value.cols());
        Parameter { value, grad }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(S::zero());
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }
}
