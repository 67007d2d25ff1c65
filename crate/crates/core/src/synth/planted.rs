//! Planted-partition node-classification generator with metric calibration.

use serde::{Deserialize, Serialize};

use crate::community::{general_within_inertia, modularity, Partition};
use crate::error::{Error, Result};
use crate::graph::adjacency::build_adjacency;
use crate::graph::data::NodeGraph;
use crate::nn::tensor::Tensor;
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::synth::attributes::{bits_for_classes, class_centroid};
use crate::synth::graph_task::stratified_split;

/// Parameters of the node-classification generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeGenConfig {
    pub num_nodes: usize,
    pub num_communities: usize,
    /// Probability of an edge inside a community.
    pub p_in: f64,
    /// Probability of an edge between communities.
    pub p_out: f64,
    /// Standard deviation of the noise added to community centroids.
    pub attr_noise: f64,
    #[serde(default = "default_centroid_separation")]
    pub centroid_separation: f64,
    pub n_features: usize,
    pub seed: u64,
}

fn default_centroid_separation() -> f64 {
    1.0
}

impl NodeGenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.p_out && self.p_out <= self.p_in && self.p_in <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "edge probabilities must satisfy 0 <= p_out <= p_in <= 1, got p_in = {}, p_out = {}",
                self.p_in, self.p_out
            )));
        }
        if self.num_communities == 0 || self.num_nodes < self.num_communities {
            return Err(Error::InvalidInput(format!(
                "{} nodes cannot host {} communities",
                self.num_nodes, self.num_communities
            )));
        }
        let bits = bits_for_classes(self.num_communities);
        if self.n_features < bits {
            return Err(Error::InvalidInput(format!(
                "{} communities need at least {bits} features, got {}",
                self.num_communities, self.n_features
            )));
        }
        if self.attr_noise < 0.0 {
            return Err(Error::InvalidInput(format!(
                "attr_noise {} must be non-negative",
                self.attr_noise
            )));
        }
        Ok(())
    }
}

/// Generates a planted-partition graph: nodes split evenly into communities,
/// intra-community edges drawn with p_in and inter with p_out, features
/// placed at community centroids plus noise, stratified 60/20/20 split.
pub fn planted_partition<S: Scalar>(config: &NodeGenConfig, rng: &mut Rng) -> Result<NodeGraph<S>> {
    config.validate()?;
    let n = config.num_nodes;
    let k = config.num_communities;

    // Contiguous blocks; the first (n mod k) communities absorb the remainder.
    let mut labels = Vec::with_capacity(n);
    for c in 0..k {
        let size = n / k + usize::from(c < n % k);
        labels.extend(std::iter::repeat(c).take(size));
    }

    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if labels[u] == labels[v] {
                config.p_in
            } else {
                config.p_out
            };
            if rng.next_bool(p) {
                edges.push((u, v));
            }
        }
    }
    if edges.is_empty() {
        return Err(Error::Numeric(
            "planted partition produced a graph with no edges".into(),
        ));
    }
    let adj = build_adjacency(&edges, n, false)?;

    let mut features = Tensor::zeros(n, config.n_features);
    for v in 0..n {
        let centroid = class_centroid(labels[v], k, config.n_features, config.centroid_separation);
        for (x, &mu) in features.row_mut(v).iter_mut().zip(&centroid) {
            *x = S::from_f64_lossy(mu + config.attr_noise * rng.next_normal_f64());
        }
    }

    let split = stratified_split(&labels, rng);
    NodeGraph::new(adj, features, labels, k, split)
}

/// Generates a node graph from the config's own seed.
pub fn generate_node_graph<S: Scalar>(config: &NodeGenConfig) -> Result<NodeGraph<S>> {
    planted_partition(config, &mut Rng::derive(config.seed, 0))
}

/// Community metrics of a config, averaged over `seeds` generations.
pub fn measure_node_config(config: &NodeGenConfig, seeds: u64) -> Result<(f64, f64)> {
    let mut m_sum = 0.0;
    let mut i_sum = 0.0;
    for s in 0..seeds {
        let graph: NodeGraph<f64> = planted_partition(config, &mut Rng::derive(config.seed, s))?;
        let partition = Partition::new(graph.labels.clone(), graph.num_classes)?;
        m_sum += modularity(&graph.adj, &partition)?;
        i_sum += general_within_inertia(&graph.features, &partition)?;
    }
    Ok((m_sum / seeds as f64, i_sum / seeds as f64))
}

const CALIBRATION_SEEDS: u64 = 5;
const CALIBRATION_TOLERANCE: f64 = 0.05;
const MAX_ITERATIONS: usize = 40;

/// Tunes p_out until measured modularity lands within ±0.05 of the target,
/// then attr_noise until within inertia does too. Measurements average 5
/// seeded generations; each knob gets at most 40 bisection steps.
pub fn calibrate_node_config(
    target_modularity: f64,
    target_inertia: f64,
    base: &NodeGenConfig,
) -> Result<NodeGenConfig> {
    base.validate()?;
    let mut config = base.clone();

    // Modularity falls as inter-community edges are added, so bisect p_out.
    // Accept slightly inside the tolerance so a re-measurement stays within it.
    let accept = CALIBRATION_TOLERANCE * 0.9;
    let mut lo = 0.0f64;
    let mut hi = config.p_in;
    let mut achieved = f64::NAN;
    let mut done = false;
    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        config.p_out = mid;
        let (m, _) = measure_node_config(&config, CALIBRATION_SEEDS)?;
        achieved = m;
        if (m - target_modularity).abs() <= accept {
            done = true;
            break;
        }
        if m > target_modularity {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !done {
        return Err(Error::Calibration {
            target: target_modularity,
            achieved,
        });
    }

    // Inertia rises with noise and does not depend on the edge knobs, so an
    // upper bracket is found by doubling, then bisected.
    let measure_inertia = |config: &NodeGenConfig| -> Result<f64> {
        Ok(measure_node_config(config, CALIBRATION_SEEDS)?.1)
    };
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    loop {
        config.attr_noise = hi;
        if measure_inertia(&config)? >= target_inertia || hi >= 1024.0 {
            break;
        }
        hi *= 2.0;
    }
    let mut achieved = f64::NAN;
    let mut done = false;
    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        config.attr_noise = mid;
        let i = measure_inertia(&config)?;
        achieved = i;
        if (i - target_inertia).abs() <= accept {
            done = true;
            break;
        }
        if i > target_inertia {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if !done {
        return Err(Error::Calibration {
            target: target_inertia,
            achieved,
        });
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::adjacency::Adjacency;

    fn base(seed: u64) -> NodeGenConfig {
        NodeGenConfig {
            num_nodes: 300,
            num_communities: 5,
            p_in: 0.08,
            p_out: 0.008,
            attr_noise: 1.0,
            centroid_separation: 1.0,
            n_features: 16,
            seed,
        }
    }

    fn brute_force_modularity(adj: &Adjacency, labels: &[usize]) -> f64 {
        let n = adj.num_nodes();
        let deg = adj.degrees();
        let two_e: f64 = deg.total.iter().sum::<usize>() as f64;
        let mut m = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] != labels[j] {
                    continue;
                }
                let a_ij = f64::from(adj.neighbors(i).binary_search(&j).is_ok());
                m += a_ij - deg.total[i] as f64 * deg.total[j] as f64 / two_e;
            }
        }
        m / two_e
    }

    #[test]
    fn isolated_communities_have_high_modularity() {
        let mut cfg = base(1);
        cfg.p_out = 0.0;
        let g: NodeGraph<f64> = generate_node_graph(&cfg).unwrap();
        let p = Partition::new(g.labels.clone(), g.num_classes).unwrap();
        let m = modularity(&g.adj, &p).unwrap();
        assert!(m >= 0.75, "m = {m}");
        let slow = brute_force_modularity(&g.adj, &g.labels);
        assert!((m - slow).abs() < 1e-12);
    }

    #[test]
    fn equal_probabilities_have_no_community_structure() {
        for seed in 0..10 {
            let mut cfg = base(seed);
            cfg.num_nodes = 1000;
            cfg.p_in = 0.01;
            cfg.p_out = 0.01;
            let g: NodeGraph<f64> = generate_node_graph(&cfg).unwrap();
            let p = Partition::new(g.labels.clone(), g.num_classes).unwrap();
            let m = modularity(&g.adj, &p).unwrap();
            assert!(m.abs() < 0.05, "seed {seed}: m = {m}");
        }
    }

    #[test]
    fn zero_noise_gives_zero_inertia() {
        let mut cfg = base(2);
        cfg.attr_noise = 0.0;
        let g: NodeGraph<f64> = generate_node_graph(&cfg).unwrap();
        let p = Partition::new(g.labels.clone(), g.num_classes).unwrap();
        assert_eq!(general_within_inertia(&g.features, &p).unwrap(), 0.0);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = base(3);
        let a: NodeGraph<f64> = generate_node_graph(&cfg).unwrap();
        let b: NodeGraph<f64> = generate_node_graph(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_edges_is_a_generation_error() {
        let mut cfg = base(4);
        cfg.p_in = 0.0;
        cfg.p_out = 0.0;
        match generate_node_graph::<f64>(&cfg) {
            Err(Error::Numeric(_)) => {}
            other => panic!("expected numeric error, got {other:?}"),
        }
    }

    #[test]
    fn split_covers_all_tags() {
        let g: NodeGraph<f64> = generate_node_graph(&base(5)).unwrap();
        use crate::graph::data::SplitTag;
        assert_eq!(g.split_indices(SplitTag::Train).len(), 180);
        assert_eq!(g.split_indices(SplitTag::Valid).len(), 60);
        assert_eq!(g.split_indices(SplitTag::Test).len(), 60);
    }

    #[test]
    fn calibration_reaches_a_mid_range_modularity() {
        let cfg = calibrate_node_config(0.5, 0.5, &base(6)).unwrap();
        let (m, i) = measure_node_config(&cfg, 5).unwrap();
        assert!((m - 0.5).abs() <= 0.05, "m = {m}");
        assert!((i - 0.5).abs() <= 0.05, "i = {i}");
    }
}
