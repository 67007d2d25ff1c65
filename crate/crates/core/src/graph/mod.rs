//! Graph representations, degrees, feature damaging, and persistence.

pub mod adjacency;
pub mod data;
pub mod io;

pub use adjacency::{build_adjacency, Adjacency, DegreeVector};
pub use data::{damage_feature_matrix, GraphDataset, GraphSample, NodeGraph, SplitTag};
pub use io::{load_graph_dataset, load_node_graph, save_graph_dataset, save_node_graph};
