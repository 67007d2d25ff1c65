//! Synthetic dataset generation with controllable community structure.

pub mod attributes;
pub mod ba;
pub mod graph_task;
pub mod planted;
pub mod presets;

pub use attributes::make_attribute_task;
pub use ba::barabasi_albert;
pub use graph_task::{
    damage_graph_attributes, generate_graph_dataset, permute_labels, stratified_split,
    swap_labels, GraphGenConfig,
};
pub use planted::{
    calibrate_node_config, generate_node_graph, measure_node_config, planted_partition,
    NodeGenConfig,
};
pub use presets::{preset, NodePreset, Preset};
