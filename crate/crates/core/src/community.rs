//! Community-structure measures: modularity over an adjacency and within
//! inertia over item properties, plus the graph-level specializations that
//! score a whole dataset by per-graph attribute means (I^A) or average
//! degree (I^S).

use crate::error::{Error, Result};
use crate::graph::adjacency::Adjacency;
use crate::graph::data::GraphDataset;
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

/// Assignment of items to classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignments: Vec<usize>,
    num_classes: usize,
}

impl Partition {
    pub fn new(assignments: Vec<usize>, num_classes: usize) -> Result<Self> {
        if let Some(&bad) = assignments.iter().find(|&&c| c >= num_classes) {
            return Err(Error::InvalidInput(format!(
                "class {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Partition {
            assignments,
            num_classes,
        })
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

/// Item property vectors paired with their partition, the inputs of the
/// general within-inertia form.
#[derive(Debug, Clone)]
pub struct InertiaInput<S: Scalar> {
    pub properties: Tensor<S>,
    pub partition: Partition,
}

/// Modularity of an undirected graph under a node partition.
///
/// M = (1/2|E|)·Σ_ij (a_ij − d_i·d_j/2|E|)·δ(i,j) over all ordered pairs,
/// diagonal included. Directed input is symmetrized first. Ranges over
/// [−1, 1]; a graph with no edges has no defined value.
pub fn modularity(adj: &Adjacency, partition: &Partition) -> Result<f64> {
    if partition.len() != adj.num_nodes() {
        return Err(Error::InvalidInput(format!(
            "partition covers {} items but graph has {} nodes",
            partition.len(),
            adj.num_nodes()
        )));
    }
    let sym;
    let adj = if adj.is_directed() {
        sym = adj.symmetrize();
        &sym
    } else {
        adj
    };
    let two_e = adj.num_arcs() as f64;
    if two_e == 0.0 {
        return Err(Error::UndefinedMetric(
            "modularity of a graph with no edges".into(),
        ));
    }
    let degrees = adj.degrees();
    let classes = partition.assignments();
    let mut within_arcs = vec![0.0f64; partition.num_classes()];
    let mut class_degree = vec![0.0f64; partition.num_classes()];
    for u in 0..adj.num_nodes() {
        class_degree[classes[u]] += degrees.total[u] as f64;
        for &v in adj.neighbors(u) {
            if classes[u] == classes[v] {
                within_arcs[classes[u]] += 1.0;
            }
        }
    }
    let m = within_arcs
        .iter()
        .zip(&class_degree)
        .map(|(&e_c, &d_c)| e_c / two_e - (d_c / two_e) * (d_c / two_e))
        .sum();
    Ok(m)
}

/// Within inertia of property vectors under a partition.
///
/// Ratio of squared Euclidean scatter about class centroids to squared
/// scatter about the global centroid; lies in [0, 1]. Empty classes
/// contribute nothing. Zero total scatter leaves the ratio undefined.
pub fn general_within_inertia<S: Scalar>(
    properties: &Tensor<S>,
    partition: &Partition,
) -> Result<f64> {
    let n = properties.rows();
    let dims = properties.cols();
    if partition.len() != n {
        return Err(Error::InvalidInput(format!(
            "partition covers {} items but {} property vectors given",
            partition.len(),
            n
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput(
            "within inertia needs at least two items".into(),
        ));
    }

    let centroid = |items: &[usize]| -> Vec<f64> {
        let mut c = vec![0.0f64; dims];
        for &i in items {
            for (acc, &v) in c.iter_mut().zip(properties.row(i)) {
                *acc += v.to_f64_exact();
            }
        }
        c.iter_mut().for_each(|v| *v /= items.len() as f64);
        c
    };
    let scatter = |items: &[usize], center: &[f64]| -> f64 {
        items
            .iter()
            .map(|&i| {
                properties
                    .row(i)
                    .iter()
                    .zip(center)
                    .map(|(&v, &c)| {
                        let d = v.to_f64_exact() - c;
                        d * d
                    })
                    .sum::<f64>()
            })
            .sum()
    };

    let all: Vec<usize> = (0..n).collect();
    let total = scatter(&all, &centroid(&all));
    if total == 0.0 {
        return Err(Error::UndefinedMetric(
            "within inertia with zero total scatter".into(),
        ));
    }

    let mut within = 0.0;
    for class in 0..partition.num_classes() {
        let members: Vec<usize> = all
            .iter()
            .copied()
            .filter(|&i| partition.assignments()[i] == class)
            .collect();
        if members.is_empty() {
            continue;
        }
        within += scatter(&members, &centroid(&members));
    }
    Ok((within / total).clamp(0.0, 1.0))
}

/// Within inertia of an [`InertiaInput`].
pub fn within_inertia<S: Scalar>(input: &InertiaInput<S>) -> Result<f64> {
    general_within_inertia(&input.properties, &input.partition)
}

/// I^A: within inertia with each graph represented by its column-wise mean
/// feature vector, partitioned by graph label.
pub fn attribute_within_inertia<S: Scalar>(dataset: &GraphDataset<S>) -> Result<f64> {
    let dims = dataset.num_features;
    let mut means: Tensor<f64> = Tensor::zeros(dataset.len(), dims);
    for (g, sample) in dataset.samples.iter().enumerate() {
        let n = sample.num_nodes();
        if n == 0 {
            return Err(Error::InvalidInput(format!("graph {g} has no nodes")));
        }
        let row = means.row_mut(g);
        for v in 0..n {
            for (acc, &x) in row.iter_mut().zip(sample.features.row(v)) {
                *acc += x.to_f64_exact();
            }
        }
        row.iter_mut().for_each(|v| *v /= n as f64);
    }
    let partition = label_partition(dataset);
    general_within_inertia(&means, &partition)
}

/// I^S: within inertia with each graph represented by its average node
/// degree, partitioned by graph label.
pub fn structural_within_inertia<S: Scalar>(dataset: &GraphDataset<S>) -> Result<f64> {
    let mut avg_degree: Tensor<f64> = Tensor::zeros(dataset.len(), 1);
    for (g, sample) in dataset.samples.iter().enumerate() {
        let n = sample.num_nodes();
        if n == 0 {
            return Err(Error::InvalidInput(format!("graph {g} has no nodes")));
        }
        let degree_sum: usize = sample.adj.degrees().total.iter().sum();
        avg_degree.set(g, 0, degree_sum as f64 / n as f64);
    }
    let partition = label_partition(dataset);
    general_within_inertia(&avg_degree, &partition)
}

fn label_partition<S: Scalar>(dataset: &GraphDataset<S>) -> Partition {
    Partition::new(
        dataset.samples.iter().map(|s| s.label).collect(),
        dataset.num_classes,
    )
    .expect("dataset labels validated at construction")
}
