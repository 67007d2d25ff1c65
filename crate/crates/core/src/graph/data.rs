//! Dataset containers for node-level and graph-level tasks.

use crate::error::{Error, Result};
use crate::graph::adjacency::Adjacency;
use crate::nn::tensor::Tensor;
use crate::rng::Rng;
use crate::scalar::Scalar;

/// Which portion of the experiment a node or graph belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitTag {
    Train,
    Valid,
    Test,
}

impl SplitTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Valid => "valid",
            SplitTag::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitTag::Train),
            "valid" => Ok(SplitTag::Valid),
            "test" => Ok(SplitTag::Test),
            other => Err(Error::InvalidInput(format!("unknown split tag {other:?}"))),
        }
    }
}

impl std::fmt::Display for SplitTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single attributed graph with one label per node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGraph<S: Scalar> {
    pub adj: Adjacency,
    /// num_nodes × num_features.
    pub features: Tensor<S>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub split: Vec<SplitTag>,
}

impl<S: Scalar> NodeGraph<S> {
    pub fn new(
        adj: Adjacency,
        features: Tensor<S>,
        labels: Vec<usize>,
        num_classes: usize,
        split: Vec<SplitTag>,
    ) -> Result<Self> {
        let n = adj.num_nodes();
        if features.rows() != n || labels.len() != n || split.len() != n {
            return Err(Error::InvalidInput(format!(
                "node graph arity mismatch: {n} nodes, {} feature rows, {} labels, {} split tags",
                features.rows(),
                labels.len(),
                split.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::InvalidInput(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(NodeGraph {
            adj,
            features,
            labels,
            num_classes,
            split,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.num_nodes()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    /// Node indices carrying the given split tag.
    pub fn split_indices(&self, tag: SplitTag) -> Vec<usize> {
        self.split
            .iter()
            .enumerate()
            .filter(|(_, &t)| t == tag)
            .map(|(i, _)| i)
            .collect()
    }

    /// Replaces every feature entry with an independent standard-normal draw.
    pub fn damage_features(&mut self, rng: &mut Rng) {
        damage_feature_matrix(&mut self.features, rng);
    }
}

/// A whole graph with a single class label.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample<S: Scalar> {
    pub adj: Adjacency,
    /// num_nodes × num_features.
    pub features: Tensor<S>,
    pub label: usize,
}

impl<S: Scalar> GraphSample<S> {
    pub fn num_nodes(&self) -> usize {
        self.adj.num_nodes()
    }

    /// Replaces every feature entry with an independent standard-normal draw.
    pub fn damage_features(&mut self, rng: &mut Rng) {
        damage_feature_matrix(&mut self.features, rng);
    }
}

/// A collection of labelled graphs for graph classification.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset<S: Scalar> {
    pub samples: Vec<GraphSample<S>>,
    pub num_classes: usize,
    pub num_features: usize,
    pub split: Vec<SplitTag>,
}

impl<S: Scalar> GraphDataset<S> {
    pub fn new(
        samples: Vec<GraphSample<S>>,
        num_classes: usize,
        num_features: usize,
        split: Vec<SplitTag>,
    ) -> Result<Self> {
        if split.len() != samples.len() {
            return Err(Error::InvalidInput(format!(
                "{} samples but {} split tags",
                samples.len(),
                split.len()
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.features.cols() != num_features {
                return Err(Error::InvalidInput(format!(
                    "graph {i} has {} features, dataset declares {num_features}",
                    s.features.cols()
                )));
            }
            if s.label >= num_classes {
                return Err(Error::InvalidInput(format!(
                    "graph {i} label {} out of range for {num_classes} classes",
                    s.label
                )));
            }
        }
        Ok(GraphDataset {
            samples,
            num_classes,
            num_features,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample indices carrying the given split tag.
    pub fn split_indices(&self, tag: SplitTag) -> Vec<usize> {
        self.split
            .iter()
            .enumerate()
            .filter(|(_, &t)| t == tag)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Overwrites a feature matrix in place with standard-normal noise.
pub fn damage_feature_matrix<S: Scalar>(features: &mut Tensor<S>, rng: &mut Rng) {
    for v in features.data_mut() {
        *v = rng.next_normal();
    }
}
