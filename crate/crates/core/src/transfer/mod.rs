//! Transfer quantification: learning curves, evaluation scores, the three
//! transfer metrics, and significance testing.

pub mod curve;
pub mod metrics;
pub mod stats;

pub use curve::{LearningCurve, MetricKind};
pub use metrics::{
    accuracy, asymptotic_performance, jumpstart, roc_auc, transfer_ratio, TransferMetrics,
    ASYMPTOTIC_TAIL,
};
pub use stats::{student_t_cdf, welch_t_greater, TTestResult};
