//! Evaluation scores and the three transfer quantities.
//!
//! Transfer is always measured against a paired baseline run: the same
//! target task and seed, trained from scratch. `transfer_ratio` compares
//! whole-curve areas, `jumpstart` compares scores before the first update,
//! and `asymptotic_performance` compares end-of-training tail means.

use crate::error::{Error, Result};

use super::curve::LearningCurve;

/// Fraction of predictions matching the true labels.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::InvalidInput("accuracy of an empty set".into()));
    }
    let correct = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / predicted.len() as f64)
}

/// Probability that a random positive scores above a random negative, ties
/// counting one half. Computed from the rank statistic:
/// AUC = (Σ ranks of positives − n⁺(n⁺+1)/2) / (n⁺·n⁻), with tied scores
/// sharing their average rank, which equals the pairwise count exactly.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedMetric(
            "ROC-AUC needs both classes present".into(),
        ));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("non-finite score in ROC-AUC input".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    // Average ranks across ties (1-based ranks).
    let mut rank_sum_positive = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let shared_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_positive += shared_rank;
            }
        }
        i = j + 1;
    }

    let np = positives as f64;
    let nn = negatives as f64;
    Ok((rank_sum_positive - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Relative gain in area under the curve: (AUC_t − AUC_b) / AUC_b.
pub fn transfer_ratio(transfer: &LearningCurve, base: &LearningCurve) -> Result<f64> {
    if !transfer.same_grid(base) {
        return Err(Error::InvalidInput(
            "transfer ratio needs curves on the same epoch grid".into(),
        ));
    }
    let auc_transfer = transfer.auc_trapezoid()?;
    let auc_base = base.auc_trapezoid()?;
    if auc_base == 0.0 {
        return Err(Error::UndefinedMetric(
            "baseline curve has zero area".into(),
        ));
    }
    Ok((auc_transfer - auc_base) / auc_base)
}

/// Score difference before the first optimizer step on the target task.
pub fn jumpstart(transfer: &LearningCurve, base: &LearningCurve) -> Result<f64> {
    match (transfer.score_at_zero(), base.score_at_zero()) {
        (Some(t), Some(b)) => Ok(t - b),
        _ => Err(Error::InvalidInput(
            "jumpstart needs an epoch-0 evaluation on both curves".into(),
        )),
    }
}

/// Difference of mean scores over the final `tail` evaluation points.
pub fn asymptotic_performance(
    transfer: &LearningCurve,
    base: &LearningCurve,
    tail: usize,
) -> Result<f64> {
    Ok(transfer.tail_mean(tail)? - base.tail_mean(tail)?)
}

pub const ASYMPTOTIC_TAIL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMetrics {
    pub transfer_ratio: f64,
    pub jumpstart: f64,
    pub asymptotic: f64,
}

impl TransferMetrics {
    /// All three metrics for one paired (transfer, base) run, with the
    /// default tail window. Both curves need an epoch-0 entry and at least
    /// `ASYMPTOTIC_TAIL` evaluation points.
    pub fn from_pair(transfer: &LearningCurve, base: &LearningCurve) -> Result<TransferMetrics> {
        let metrics = TransferMetrics {
            transfer_ratio: transfer_ratio(transfer, base)?,
            jumpstart: jumpstart(transfer, base)?,
            asymptotic: asymptotic_performance(transfer, base, ASYMPTOTIC_TAIL)?,
        };
        if !metrics.transfer_ratio.is_finite()
            || !metrics.jumpstart.is_finite()
            || !metrics.asymptotic.is_finite()
        {
            return Err(Error::Numeric("non-finite transfer metric".into()));
        }
        Ok(metrics)
    }
}
