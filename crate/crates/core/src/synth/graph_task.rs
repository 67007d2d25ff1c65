//! Graph-classification dataset generator.
//!
//! Four steps: build an attribute-level task, grow one preferential-attachment
//! graph per instance with a class-specific attachment parameter, swap labels
//! between random pairs of graphs, and damage the attributes of a random
//! subset. Swapping erodes structural community structure, damaging erodes
//! attribute structure, so both are independently tunable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::data::{GraphDataset, GraphSample, SplitTag};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::synth::attributes::{bits_for_classes, make_attribute_task};
use crate::synth::ba::barabasi_albert;

/// Parameters of the graph-classification generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphGenConfig {
    pub num_classes: usize,
    pub n_per_class: usize,
    pub n_features: usize,
    /// Fraction of graphs participating in label swaps, in [0, 1].
    pub percent_swap: f64,
    /// Fraction of graphs whose attributes are replaced by noise, in [0, 1].
    pub percent_damage: f64,
    #[serde(default = "default_nodes_per_graph")]
    pub nodes_per_graph: usize,
    #[serde(default = "default_class_separation")]
    pub class_separation: f64,
    pub seed: u64,
}

fn default_nodes_per_graph() -> usize {
    30
}

fn default_class_separation() -> f64 {
    1.0
}

impl GraphGenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.percent_swap) {
            return Err(Error::InvalidInput(format!(
                "percent_swap {} outside [0, 1]",
                self.percent_swap
            )));
        }
        if !(0.0..=1.0).contains(&self.percent_damage) {
            return Err(Error::InvalidInput(format!(
                "percent_damage {} outside [0, 1]",
                self.percent_damage
            )));
        }
        if self.num_classes == 0 || self.n_per_class == 0 {
            return Err(Error::InvalidInput(
                "num_classes and n_per_class must be positive".into(),
            ));
        }
        // Class c uses attachment parameter c + 1, so the largest is num_classes.
        if self.nodes_per_graph <= self.num_classes {
            return Err(Error::InvalidInput(format!(
                "nodes_per_graph {} too small for attachment parameter {}",
                self.nodes_per_graph, self.num_classes
            )));
        }
        let bits = bits_for_classes(self.num_classes);
        if self.n_features < bits {
            return Err(Error::InvalidInput(format!(
                "{} classes need at least {bits} features, got {}",
                self.num_classes, self.n_features
            )));
        }
        if !(self.class_separation > 0.0) {
            return Err(Error::InvalidInput(format!(
                "class_separation {} must be positive",
                self.class_separation
            )));
        }
        Ok(())
    }
}

/// Runs the full 4-step pipeline for a config.
pub fn generate_graph_dataset<S: Scalar>(config: &GraphGenConfig) -> Result<GraphDataset<S>> {
    config.validate()?;
    let mut rng = Rng::derive(config.seed, 0);

    let (vectors, _) = make_attribute_task::<S>(
        config.num_classes,
        config.n_per_class * config.nodes_per_graph,
        config.n_features,
        config.class_separation,
        &mut rng,
    )?;

    let mut samples = Vec::with_capacity(config.num_classes * config.n_per_class);
    let mut next_row = 0usize;
    for class in 0..config.num_classes {
        let m = class + 1;
        for _ in 0..config.n_per_class {
            let adj = barabasi_albert(config.nodes_per_graph, m, &mut rng)?;
            let mut features = crate::nn::tensor::Tensor::zeros(
                config.nodes_per_graph,
                config.n_features,
            );
            for v in 0..config.nodes_per_graph {
                features.row_mut(v).copy_from_slice(vectors.row(next_row));
                next_row += 1;
            }
            samples.push(GraphSample {
                adj,
                features,
                label: class,
            });
        }
    }

    let total = samples.len();
    let mut dataset = GraphDataset::new(
        samples,
        config.num_classes,
        config.n_features,
        vec![SplitTag::Train; total],
    )?;

    swap_labels(&mut dataset, config.percent_swap, &mut rng)?;
    damage_graph_attributes(&mut dataset, config.percent_damage, &mut rng)?;
    dataset.split = stratified_split(
        &dataset.samples.iter().map(|s| s.label).collect::<Vec<_>>(),
        &mut rng,
    );
    Ok(dataset)
}

/// Exchanges labels within floor(percent·N/2) disjoint random pairs of
/// graphs. Attribute vectors travel with their graphs. Returns the pairs,
/// so applying the same list again undoes the swap.
pub fn swap_labels<S: Scalar>(
    dataset: &mut GraphDataset<S>,
    percent: f64,
    rng: &mut Rng,
) -> Result<Vec<(usize, usize)>> {
    if !(0.0..=1.0).contains(&percent) {
        return Err(Error::InvalidInput(format!(
            "percent_swap {percent} outside [0, 1]"
        )));
    }
    let n = dataset.len();
    let num_pairs = ((percent * n as f64) / 2.0).floor() as usize;
    let chosen = rng.sample_indices(n, 2 * num_pairs);
    let pairs: Vec<(usize, usize)> = chosen
        .chunks_exact(2)
        .map(|c| (c[0], c[1]))
        .collect();
    apply_label_swaps(dataset, &pairs);
    Ok(pairs)
}

/// Exchanges the labels of each listed pair in order.
pub fn apply_label_swaps<S: Scalar>(dataset: &mut GraphDataset<S>, pairs: &[(usize, usize)]) {
    for &(a, b) in pairs {
        let tmp = dataset.samples[a].label;
        dataset.samples[a].label = dataset.samples[b].label;
        dataset.samples[b].label = tmp;
    }
}

/// Replaces the full feature matrices of floor(percent·N) random graphs with
/// standard-normal noise. Returns the damaged indices.
pub fn damage_graph_attributes<S: Scalar>(
    dataset: &mut GraphDataset<S>,
    percent: f64,
    rng: &mut Rng,
) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&percent) {
        return Err(Error::InvalidInput(format!(
            "percent_damage {percent} outside [0, 1]"
        )));
    }
    let n = dataset.len();
    let count = (percent * n as f64).floor() as usize;
    let chosen = rng.sample_indices(n, count);
    for &i in &chosen {
        dataset.samples[i].damage_features(rng);
    }
    Ok(chosen)
}

/// Shuffles all labels uniformly and re-stratifies the split, severing every
/// label-input association while keeping the label marginals. Pairwise
/// swapping cannot do this: even at 100% participation a random pair carries
/// the same label with probability 1/C, so a large residual signal survives.
pub fn permute_labels<S: Scalar>(dataset: &mut GraphDataset<S>, rng: &mut Rng) {
    let mut labels: Vec<usize> = dataset.samples.iter().map(|s| s.label).collect();
    rng.shuffle(&mut labels);
    for (sample, label) in dataset.samples.iter_mut().zip(&labels) {
        sample.label = *label;
    }
    dataset.split = stratified_split(&labels, rng);
}

/// Per-class 60/20/20 split: members of each class are shuffled, the first
/// 60% tagged train, the next 20% valid, the rest test.
pub fn stratified_split(labels: &[usize], rng: &mut Rng) -> Vec<SplitTag> {
    let num_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut split = vec![SplitTag::Train; labels.len()];
    for class in 0..num_classes {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        rng.shuffle(&mut members);
        let k = members.len();
        let n_train = k * 6 / 10;
        let n_valid = k * 2 / 10;
        for (rank, &i) in members.iter().enumerate() {
            split[i] = if rank < n_train {
                SplitTag::Train
            } else if rank < n_train + n_valid {
                SplitTag::Valid
            } else {
                SplitTag::Test
            };
        }
    }
    split
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::community::{attribute_within_inertia, structural_within_inertia};

    fn base_config(seed: u64) -> GraphGenConfig {
        GraphGenConfig {
            num_classes: 2,
            n_per_class: 50,
            n_features: 8,
            percent_swap: 0.0,
            percent_damage: 0.0,
            nodes_per_graph: 30,
            class_separation: 1.0,
            seed,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = base_config(11);
        let a: GraphDataset<f64> = generate_graph_dataset(&cfg).unwrap();
        let b: GraphDataset<f64> = generate_graph_dataset(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn class_attachment_schedule_separates_mean_degrees() {
        let d: GraphDataset<f64> = generate_graph_dataset(&base_config(3)).unwrap();
        let mean_degree = |class: usize| -> f64 {
            let graphs: Vec<_> = d.samples.iter().filter(|s| s.label == class).collect();
            graphs
                .iter()
                .map(|s| s.adj.num_arcs() as f64 / s.num_nodes() as f64)
                .sum::<f64>()
                / graphs.len() as f64
        };
        // m = 1 gives 29 edges on 30 nodes, m = 2 gives 56.
        assert!((mean_degree(0) - 2.0 * 29.0 / 30.0).abs() < 1e-12);
        assert!((mean_degree(1) - 2.0 * 56.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn untouched_dataset_has_strong_structure() {
        for seed in 0..10 {
            let d: GraphDataset<f64> = generate_graph_dataset(&base_config(seed)).unwrap();
            let i_s = structural_within_inertia(&d).unwrap();
            let i_a = attribute_within_inertia(&d).unwrap();
            assert!(i_s < 0.2, "seed {seed}: I^S = {i_s}");
            assert!(i_a < 0.2, "seed {seed}: I^A = {i_a}");
        }
    }

    #[test]
    fn zero_percent_swap_is_a_no_op() {
        let cfg = base_config(4);
        let mut d: GraphDataset<f64> = generate_graph_dataset(&cfg).unwrap();
        let before = d.clone();
        let pairs = swap_labels(&mut d, 0.0, &mut Rng::new(1)).unwrap();
        assert!(pairs.is_empty());
        assert_eq!(d, before);
    }

    #[test]
    fn full_swap_mixes_structural_classes() {
        for seed in 0..10 {
            let mut d: GraphDataset<f64> = generate_graph_dataset(&base_config(seed)).unwrap();
            swap_labels(&mut d, 1.0, &mut Rng::new(900 + seed)).unwrap();
            let i_s = structural_within_inertia(&d).unwrap();
            assert!(i_s > 0.8, "seed {seed}: I^S = {i_s}");
        }
    }

    #[test]
    fn swapping_twice_restores_labels() {
        let mut d: GraphDataset<f64> = generate_graph_dataset(&base_config(6)).unwrap();
        let labels_before: Vec<usize> = d.samples.iter().map(|s| s.label).collect();
        let pairs = swap_labels(&mut d, 0.5, &mut Rng::new(2)).unwrap();
        apply_label_swaps(&mut d, &pairs);
        let labels_after: Vec<usize> = d.samples.iter().map(|s| s.label).collect();
        assert_eq!(labels_before, labels_after);
    }

    #[test]
    fn swap_preserves_topology_and_features() {
        let mut d: GraphDataset<f64> = generate_graph_dataset(&base_config(7)).unwrap();
        let before = d.clone();
        swap_labels(&mut d, 0.8, &mut Rng::new(3)).unwrap();
        for (a, b) in d.samples.iter().zip(&before.samples) {
            assert_eq!(a.adj, b.adj);
            assert_eq!(a.features, b.features);
        }
    }

    #[test]
    fn damage_counts_and_invariance() {
        let mut d: GraphDataset<f64> = generate_graph_dataset(&base_config(8)).unwrap();
        let before = d.clone();
        let damaged = damage_graph_attributes(&mut d, 0.25, &mut Rng::new(4)).unwrap();
        assert_eq!(damaged.len(), d.len() / 4);
        for (i, (a, b)) in d.samples.iter().zip(&before.samples).enumerate() {
            assert_eq!(a.adj, b.adj);
            assert_eq!(a.label, b.label);
            if damaged.contains(&i) {
                assert_ne!(a.features, b.features);
            } else {
                assert_eq!(a.features, b.features);
            }
        }
    }

    #[test]
    fn full_damage_destroys_attribute_structure() {
        for seed in 0..10 {
            let mut cfg = base_config(20 + seed);
            cfg.percent_damage = 1.0;
            let d: GraphDataset<f64> = generate_graph_dataset(&cfg).unwrap();
            let i_a = attribute_within_inertia(&d).unwrap();
            assert!(i_a >= 0.95, "seed {seed}: I^A = {i_a}");
        }
    }

    #[test]
    fn permutation_keeps_label_counts_and_restratifies() {
        let mut d: GraphDataset<f64> = generate_graph_dataset(&base_config(12)).unwrap();
        let before = d.clone();
        permute_labels(&mut d, &mut Rng::new(5));
        let count = |data: &GraphDataset<f64>, class| {
            data.samples.iter().filter(|s| s.label == class).count()
        };
        for class in 0..2 {
            assert_eq!(count(&d, class), count(&before, class));
        }
        let moved = d
            .samples
            .iter()
            .zip(&before.samples)
            .filter(|(a, b)| a.label != b.label)
            .count();
        assert!(moved > 20, "only {moved} labels moved");
        for (a, b) in d.samples.iter().zip(&before.samples) {
            assert_eq!(a.adj, b.adj);
            assert_eq!(a.features, b.features);
        }
        for class in 0..2 {
            let members: Vec<usize> = d
                .samples
                .iter()
                .enumerate()
                .filter(|(_, s)| s.label == class)
                .map(|(i, _)| i)
                .collect();
            let trains = members.iter().filter(|&&i| d.split[i] == SplitTag::Train).count();
            assert_eq!(trains, 30);
        }
    }

    #[test]
    fn split_is_stratified_60_20_20() {
        let d: GraphDataset<f64> = generate_graph_dataset(&base_config(9)).unwrap();
        for class in 0..2 {
            let members: Vec<usize> = d
                .samples
                .iter()
                .enumerate()
                .filter(|(_, s)| s.label == class)
                .map(|(i, _)| i)
                .collect();
            let count = |tag| members.iter().filter(|&&i| d.split[i] == tag).count();
            assert_eq!(count(SplitTag::Train), 30);
            assert_eq!(count(SplitTag::Valid), 10);
            assert_eq!(count(SplitTag::Test), 10);
        }
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let mut cfg = base_config(1);
        cfg.percent_swap = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = base_config(1);
        cfg.nodes_per_graph = 2;
        assert!(cfg.validate().is_err());
        let mut cfg = base_config(1);
        cfg.num_classes = 300;
        cfg.n_features = 2;
        assert!(cfg.validate().is_err());
    }
}
