//! The eight documented generator configurations.
//!
//! Presets 1 through 4 are node-classification configs carrying calibration
//! targets for (modularity, within inertia); presets 5 through 8 are
//! graph-classification configs varying (percent_swap, percent_damage).

use crate::error::{Error, Result};
use crate::synth::graph_task::GraphGenConfig;
use crate::synth::planted::NodeGenConfig;

/// A node preset is calibrated toward target metrics before use.
#[derive(Debug, Clone, PartialEq)]
pub struct NodePreset {
    pub config: NodeGenConfig,
    pub target_modularity: f64,
    pub target_inertia: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Node(NodePreset),
    Graph(GraphGenConfig),
}

/// Returns preset `id` (1..=8); ids outside that range are an input error.
pub fn preset(id: usize) -> Result<Preset> {
    let node = |id: usize, target_modularity: f64, target_inertia: f64| {
        Preset::Node(NodePreset {
            config: NodeGenConfig {
                num_nodes: 1000,
                num_communities: 5,
                p_in: 0.05,
                p_out: 0.005,
                attr_noise: 1.0,
                centroid_separation: 1.0,
                n_features: 32,
                seed: 1000 + id as u64,
            },
            target_modularity,
            target_inertia,
        })
    };
    let graph = |id: usize, percent_swap: f64, percent_damage: f64| {
        Preset::Graph(GraphGenConfig {
            num_classes: 3,
            n_per_class: 200,
            n_features: 8,
            percent_swap,
            percent_damage,
            nodes_per_graph: 30,
            class_separation: 1.0,
            seed: 1000 + id as u64,
        })
    };
    Ok(match id {
        1 => node(1, 0.64, 0.37),
        2 => node(2, 0.64, 0.47),
        3 => node(3, 0.32, 0.39),
        4 => node(4, 0.28, 0.99),
        5 => graph(5, 0.95, 0.95),
        6 => graph(6, 0.92, 0.95),
        7 => graph(7, 0.95, 0.92),
        8 => graph(8, 0.92, 0.92),
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown preset {other}, valid ids are 1..=8"
            )))
        }
    })
}
