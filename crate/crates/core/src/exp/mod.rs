//! Experiment orchestration: configuration, training loops, paired transfer
//! runs, on-disk run artifacts, and report aggregation.

pub mod artifacts;
pub mod config;
pub mod driver;
pub mod report;
pub mod svg;
pub mod train;
pub mod transfer;

pub use artifacts::{ExperimentMeta, RunRecord};
pub use config::{ExperimentConfig, ExperimentPlan, TransferProtocol};
pub use driver::{cmd_generate, cmd_metrics, cmd_pretrain, cmd_report, cmd_transfer};
pub use report::{aggregate_curves, load_experiment, write_report, ExperimentResults};
pub use train::{train_graph_model, train_node_model, RunCurves, TrainSettings};
pub use transfer::{
    run_transfer_experiment, run_transfer_pair, PairedRun, TaskData, TransferSpec,
};
