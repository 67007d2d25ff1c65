//! Per-column batch normalization with running statistics.

use crate::error::{Error, Result};
use crate::nn::param::Parameter;
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

/// Batch normalization over rows: each column is standardized with batch
/// statistics at train time (biased variance) and with running statistics at
/// evaluation time. Running stats follow running ← (1−momentum)·running +
/// momentum·batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<S: Scalar> {
    pub gamma: Parameter<S>,
    pub beta: Parameter<S>,
    pub running_mean: Vec<S>,
    pub running_var: Vec<S>,
    pub momentum: f64,
    pub eps: f64,
}

/// Values saved by a training-mode forward for the backward pass.
#[derive(Debug)]
pub struct BatchNormCtx<S: Scalar> {
    normalized: Tensor<S>,
    inv_std: Vec<S>,
}

impl<S: Scalar> BatchNorm<S> {
    pub fn new(dim: usize) -> Self {
        BatchNorm {
            gamma: Parameter::new(Tensor::from_vec(1, dim, vec![S::one(); dim])),
            beta: Parameter::new(Tensor::zeros(1, dim)),
            running_mean: vec![S::zero(); dim],
            running_var: vec![S::one(); dim],
            momentum: 0.1,
            eps: 1e-5,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.value.cols()
    }

    fn check_dim(&self, input: &Tensor<S>) -> Result<()> {
        if input.cols() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "batch norm over {} columns got {}",
                self.dim(),
                input.cols()
            )));
        }
        Ok(())
    }

    /// Training-mode forward: standardizes with batch statistics and updates
    /// the running ones.
    pub fn forward_train(&mut self, input: &Tensor<S>) -> Result<(Tensor<S>, BatchNormCtx<S>)> {
        self.check_dim(input)?;
        let n = input.rows();
        if n == 0 {
            return Err(Error::InvalidInput("batch norm over an empty batch".into()));
        }
        let dim = self.dim();
        let n_s = S::from_f64_lossy(n as f64);

        let mut mean = vec![S::zero(); dim];
        for i in 0..n {
            for (m, &v) in mean.iter_mut().zip(input.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n_s);

        let mut var = vec![S::zero(); dim];
        for i in 0..n {
            for ((s, &v), &m) in var.iter_mut().zip(input.row(i)).zip(&mean) {
                let d = v - m;
                *s += d * d;
            }
        }
        var.iter_mut().for_each(|v| *v /= n_s);

        let momentum = S::from_f64_lossy(self.momentum);
        for (r, &b) in self.running_mean.iter_mut().zip(&mean) {
            *r = (S::one() - momentum) * *r + momentum * b;
        }
        for (r, &b) in self.running_var.iter_mut().zip(&var) {
            *r = (S::one() - momentum) * *r + momentum * b;
        }

        let eps = S::from_f64_lossy(self.eps);
        let inv_std: Vec<S> = var.iter().map(|&v| S::one() / (v + eps).sqrt()).collect();

        let mut normalized = input.clone();
        for i in 0..n {
            for ((x, &m), &s) in normalized.row_mut(i).iter_mut().zip(&mean).zip(&inv_std) {
                *x = (*x - m) * s;
            }
        }
        let out = self.scale_shift(&normalized);
        Ok((
            out,
            BatchNormCtx {
                normalized,
                inv_std,
            },
        ))
    }

    /// Evaluation-mode forward: standardizes with running statistics.
    pub fn forward_eval(&self, input: &Tensor<S>) -> Result<Tensor<S>> {
        self.check_dim(input)?;
        let eps = S::from_f64_lossy(self.eps);
        let inv_std: Vec<S> = self
            .running_var
            .iter()
            .map(|&v| S::one() / (v + eps).sqrt())
            .collect();
        let mut normalized = input.clone();
        for i in 0..input.rows() {
            for ((x, &m), &s) in normalized
                .row_mut(i)
                .iter_mut()
                .zip(&self.running_mean)
                .zip(&inv_std)
            {
                *x = (*x - m) * s;
            }
        }
        Ok(self.scale_shift(&normalized))
    }

    fn scale_shift(&self, normalized: &Tensor<S>) -> Tensor<S> {
        let mut out = normalized.clone();
        for i in 0..out.rows() {
            for ((o, &g), &b) in out
                .row_mut(i)
                .iter_mut()
                .zip(self.gamma.value.row(0))
                .zip(self.beta.value.row(0))
            {
                *o = *o * g + b;
            }
        }
        out
    }

    /// Accumulates gamma/beta gradients and returns d(loss)/d(input).
    pub fn backward(&mut self, ctx: &BatchNormCtx<S>, dout: &Tensor<S>) -> Tensor<S> {
        let n = dout.rows();
        let dim = self.dim();
        let n_s = S::from_f64_lossy(n as f64);

        for i in 0..n {
            for ((g, &d), &x) in self
                .gamma
                .grad
                .row_mut(0)
                .iter_mut()
                .zip(dout.row(i))
                .zip(ctx.normalized.row(i))
            {
                *g += d * x;
            }
            for (b, &d) in self.beta.grad.row_mut(0).iter_mut().zip(dout.row(i)) {
                *b += d;
            }
        }

        // dx = (γ·inv_std/n)·(n·dout − Σdout − x̂·Σ(dout·x̂)) per column.
        let mut sum_dout = vec![S::zero(); dim];
        let mut sum_dout_norm = vec![S::zero(); dim];
        for i in 0..n {
            for ((s, &d), (sn, &x)) in sum_dout
                .iter_mut()
                .zip(dout.row(i))
                .zip(sum_dout_norm.iter_mut().zip(ctx.normalized.row(i)))
            {
                *s += d;
                *sn += d * x;
            }
        }
        let mut dx = Tensor::zeros(n, dim);
        for i in 0..n {
            for j in 0..dim {
                let gamma = self.gamma.value.get(0, j);
                let term = n_s * dout.get(i, j) - sum_dout[j]
                    - ctx.normalized.get(i, j) * sum_dout_norm[j];
                dx.set(i, j, gamma * ctx.inv_std[j] / n_s * term);
            }
        }
        dx
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter<S>> {
        vec![&mut self.gamma, &mut self.beta]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn train_forward_standardizes_columns() {
        let mut bn: BatchNorm<f64> = BatchNorm::new(2);
        let x = Tensor::from_vec(4, 2, vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 4.0, 40.0]);
        let (y, _) = bn.forward_train(&x).unwrap();
        for j in 0..2 {
            let mean: f64 = (0..4).map(|i| y.get(i, j)).sum::<f64>() / 4.0;
            let var: f64 = (0..4).map(|i| (y.get(i, j) - mean).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12, "column {j} mean {mean}");
            assert!((var - 1.0).abs() < 1e-4, "column {j} var {var}");
        }
    }

    #[test]
    fn running_stats_follow_momentum() {
        let mut bn: BatchNorm<f64> = BatchNorm::new(1);
        let x = Tensor::from_vec(2, 1, vec![4.0, 8.0]);
        bn.forward_train(&x).unwrap();
        // Batch mean 6, biased variance 4; running starts at (0, 1).
        assert!((bn.running_mean[0] - 0.6).abs() < 1e-12);
        assert!((bn.running_var[0] - (0.9 + 0.4)).abs() < 1e-12);
    }

    #[test]
    fn eval_uses_running_statistics() {
        let mut bn: BatchNorm<f64> = BatchNorm::new(1);
        bn.running_mean[0] = 2.0;
        bn.running_var[0] = 4.0;
        let x = Tensor::from_vec(1, 1, vec![4.0]);
        let y = bn.forward_eval(&x).unwrap();
        let expected = (4.0 - 2.0) / (4.0f64 + 1e-5).sqrt();
        assert!((y.get(0, 0) - expected).abs() < 1e-12);
    }

    #[test]
    fn eval_mode_does_not_touch_running_stats() {
        let bn: BatchNorm<f64> = BatchNorm::new(2);
        let before = (bn.running_mean.clone(), bn.running_var.clone());
        let x = Tensor::from_vec(3, 2, vec![1.0; 6]);
        bn.forward_eval(&x).unwrap();
        assert_eq!(before, (bn.running_mean.clone(), bn.running_var.clone()));
    }

    #[test]
    fn dim_mismatch_is_an_error() {
        let mut bn: BatchNorm<f64> = BatchNorm::new(3);
        assert!(bn.forward_train(&Tensor::zeros(2, 2)).is_err());
        assert!(bn.forward_eval(&Tensor::zeros(2, 2)).is_err());
    }
}
