//! Supervised losses with analytic gradients.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

/// Mean negative log-softmax of the true class over the listed rows.
///
/// Returns the scalar loss and d(loss)/d(logits); rows outside `rows` get a
/// zero gradient, which is how node-level training restricts the objective
/// to one split while the forward pass covers the whole graph.
pub fn masked_softmax_cross_entropy<S: Scalar>(
    logits: &Tensor<S>,
    labels: &[usize],
    rows: &[usize],
) -> Result<(f64, Tensor<S>)> {
    let k = logits.cols();
    if labels.len() != logits.rows() {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} logit rows",
            labels.len(),
            logits.rows()
        )));
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("loss over an empty row set".into()));
    }
    let mut loss = 0.0f64;
    let mut grad = Tensor::zeros(logits.rows(), k);
    let inv_n = 1.0 / rows.len() as f64;
    for &i in rows {
        if i >= logits.rows() {
            return Err(Error::InvalidInput(format!("row {i} out of range")));
        }
        let label = labels[i];
        if label >= k {
            return Err(Error::InvalidInput(format!(
                "label {label} out of range for {k} classes"
            )));
        }
        let row: Vec<f64> = logits.row(i).iter().map(|v| v.to_f64_exact()).collect();
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
        let sum: f64 = exp.iter().sum();
        loss += -(row[label] - max - sum.ln());
        for j in 0..k {
            let softmax = exp[j] / sum;
            let onehot = f64::from(j == label);
            grad.set(i, j, S::from_f64_lossy((softmax - onehot) * inv_n));
        }
    }
    Ok((loss * inv_n, grad))
}

/// Mean negative log-softmax over all rows.
pub fn softmax_cross_entropy<S: Scalar>(
    logits: &Tensor<S>,
    labels: &[usize],
) -> Result<(f64, Tensor<S>)> {
    let all: Vec<usize> = (0..logits.rows()).collect();
    masked_softmax_cross_entropy(logits, labels, &all)
}

/// Mean binary cross entropy of a sigmoid over one logit per sample.
pub fn binary_logistic_loss<S: Scalar>(
    logits: &Tensor<S>,
    labels: &[usize],
) -> Result<(f64, Tensor<S>)> {
    if logits.cols() != 1 {
        return Err(Error::InvalidInput(format!(
            "binary loss expects one logit per row, got {} columns",
            logits.cols()
        )));
    }
    if labels.len() != logits.rows() {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} logit rows",
            labels.len(),
            logits.rows()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidInput(format!("binary label {bad} not in {{0, 1}}")));
    }
    let n = logits.rows();
    if n == 0 {
        return Err(Error::InvalidInput("loss over an empty batch".into()));
    }
    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0f64;
    let mut grad = Tensor::zeros(n, 1);
    for i in 0..n {
        let z = logits.get(i, 0).to_f64_exact();
        let y = labels[i] as f64;
        // ln(1 + e^{-(2y-1)z}) computed without overflow.
        let t = (2.0 * y - 1.0) * z;
        loss += (-t).max(0.0) + (-t.abs()).exp().ln_1p();
        let sigmoid = if z >= 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            let e = z.exp();
            e / (1.0 + e)
        };
        grad.set(i, 0, S::from_f64_lossy((sigmoid - y) * inv_n));
    }
    Ok((loss * inv_n, grad))
}
