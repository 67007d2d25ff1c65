//! A self-contained laboratory for studying transfer between graph learning
//! tasks: synthetic attributed-graph generation with controllable community
//! structure, small message-passing networks trained from scratch, and
//! metrics that quantify how much a pretrained model helps on a new task.

pub mod community;
pub mod error;
pub mod exp;
pub mod gnn;
pub mod graph;
pub mod nn;
pub mod rng;
pub mod scalar;
pub mod synth;
pub mod transfer;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default-precision tensor.
pub type Tensor64 = nn::Tensor<f64>;
/// Default-precision node-classification graph.
pub type NodeGraph64 = graph::NodeGraph<f64>;
/// Default-precision graph-classification sample.
pub type GraphSample64 = graph::GraphSample<f64>;
/// Default-precision graph-classification dataset.
pub type GraphDataset64 = graph::GraphDataset<f64>;
