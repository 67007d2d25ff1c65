//! Graph neural networks: aggregation operators, convolution layers, model
//! assembly, and checkpointing.

pub mod agg;
pub mod checkpoint;
pub mod conv;
pub mod model;

pub use agg::{AggKind, AggOp};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use conv::GnnConv;
pub use model::{
    mean_pool, mean_pool_backward, GnnModel, GnnModelConfig, GraphBatch, TaskKind,
};
