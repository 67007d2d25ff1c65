//! Learning curves: score-over-epoch trajectories for one run on one split.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Accuracy,
    RocAuc,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::RocAuc => "roc_auc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(MetricKind::Accuracy),
            "roc_auc" => Ok(MetricKind::RocAuc),
            other => Err(Error::InvalidInput(format!("unknown metric kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Epochs are kept as floats so the curve is agnostic to how the epoch axis
/// is parameterized; trainers record integer epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    metric: MetricKind,
    points: Vec<(f64, f64)>,
}

impl LearningCurve {
    pub fn new(metric: MetricKind, points: Vec<(f64, f64)>) -> Result<LearningCurve> {
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidInput(format!(
                    "epochs must be strictly increasing, got {} after {}",
                    w[1].0, w[0].0
                )));
            }
        }
        for &(epoch, score) in &points {
            if !epoch.is_finite() || !score.is_finite() || !(0.0..=1.0).contains(&score) {
                return Err(Error::InvalidInput(format!(
                    "score {score} at epoch {epoch} outside [0, 1]"
                )));
            }
        }
        Ok(LearningCurve { metric, points })
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Score recorded at epoch 0, if the curve starts there.
    pub fn score_at_zero(&self) -> Option<f64> {
        self.points.first().filter(|p| p.0 == 0.0).map(|p| p.1)
    }

    /// Mean of the last `k` scores.
    pub fn tail_mean(&self, k: usize) -> Result<f64> {
        if k == 0 || self.points.len() < k {
            return Err(Error::InvalidInput(format!(
                "tail of {k} points requested from a curve of {}",
                self.points.len()
            )));
        }
        let tail = &self.points[self.points.len() - k..];
        Ok(tail.iter().map(|p| p.1).sum::<f64>() / k as f64)
    }

    /// Trapezoidal area under the curve over the epoch axis.
    pub fn auc_trapezoid(&self) -> Result<f64> {
        if self.points.len() < 2 {
            return Err(Error::InvalidInput(
                "area under a curve needs at least two points".into(),
            ));
        }
        let mut area = 0.0;
        for w in self.points.windows(2) {
            area += 0.5 * (w[1].1 + w[0].1) * (w[1].0 - w[0].0);
        }
        Ok(area)
    }

    /// True when both curves sample the same epochs.
    pub fn same_grid(&self, other: &LearningCurve) -> bool {
        self.points.len() == other.points.len()
            && self
                .points
                .iter()
                .zip(&other.points)
                .all(|(a, b)| a.0 == b.0)
    }
}
