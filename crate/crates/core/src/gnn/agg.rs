//! Sparse neighborhood aggregation.
//!
//! Each layer kind reduces to a sparse linear operator over node features;
//! building the operator once per graph makes the layer forward a weighted
//! CSR product and its backward the transpose product. Messages flow along
//! stored arcs (u → v), so on undirected graphs every edge carries messages
//! both ways.

use crate::error::{Error, Result};
use crate::graph::adjacency::Adjacency;
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggKind {
    Gcn,
    Sage,
    Gin,
}

impl AggKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AggKind::Gcn => "gcn",
            AggKind::Sage => "sage",
            AggKind::Gin => "gin",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(AggKind::Gcn),
            "sage" | "graphsage" => Ok(AggKind::Sage),
            "gin" => Ok(AggKind::Gin),
            other => Err(Error::InvalidInput(format!("unknown layer kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for AggKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Weighted sparse operator in CSR form, with its transpose precomputed.
///
/// For GCN the operator is D̃^{−1/2}(A+I)D̃^{−1/2}; for the mean-style layer
/// it is D̃ᵢₙ^{−1}(A+I); for GIN it is the bare neighbor sum A (the scaled
/// self term is applied by the layer, where its ε parameter lives).
#[derive(Debug, Clone, PartialEq)]
pub struct AggOp<S: Scalar> {
    kind: AggKind,
    num_nodes: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<S>,
    t_offsets: Vec<usize>,
    t_cols: Vec<usize>,
    t_weights: Vec<S>,
}

impl<S: Scalar> AggOp<S> {
    pub fn new(kind: AggKind, adj: &Adjacency) -> AggOp<S> {
        let n = adj.num_nodes();
        let degrees = adj.degrees();

        // In-neighbor lists: who sends a message to v.
        let mut in_neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
        for u in 0..n {
            for &v in adj.neighbors(u) {
                in_neighbors[v].push(u);
            }
        }

        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for v in 0..n {
            match kind {
                AggKind::Gcn => {
                    let dv = degrees.renormalized[v];
                    entries.push((v, v, 1.0 / dv));
                    for &u in &in_neighbors[v] {
                        entries.push((v, u, 1.0 / (degrees.renormalized[u] * dv).sqrt()));
                    }
                }
                AggKind::Sage => {
                    let dv = degrees.renormalized_in[v];
                    entries.push((v, v, 1.0 / dv));
                    for &u in &in_neighbors[v] {
                        entries.push((v, u, 1.0 / dv));
                    }
                }
                AggKind::Gin => {
                    for &u in &in_neighbors[v] {
                        entries.push((v, u, 1.0));
                    }
                }
            }
        }

        let (offsets, cols, weights) = to_csr(n, entries.iter().copied());
        let (t_offsets, t_cols, t_weights) =
            to_csr(n, entries.iter().map(|&(r, c, w)| (c, r, w)));
        AggOp {
            kind,
            num_nodes: n,
            offsets,
            cols,
            weights,
            t_offsets,
            t_cols,
            t_weights,
        }
    }

    pub fn kind(&self) -> AggKind {
        self.kind
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Operator times feature matrix.
    pub fn apply(&self, h: &Tensor<S>) -> Result<Tensor<S>> {
        self.apply_csr(&self.offsets, &self.cols, &self.weights, h)
    }

    /// Transposed operator times matrix (the backward direction).
    pub fn apply_transpose(&self, h: &Tensor<S>) -> Result<Tensor<S>> {
        self.apply_csr(&self.t_offsets, &self.t_cols, &self.t_weights, h)
    }

    fn apply_csr(
        &self,
        offsets: &[usize],
        cols: &[usize],
        weights: &[S],
        h: &Tensor<S>,
    ) -> Result<Tensor<S>> {
        if h.rows() != self.num_nodes {
            return Err(Error::InvalidInput(format!(
                "aggregation over {} nodes got {} feature rows",
                self.num_nodes,
                h.rows()
            )));
        }
        let mut out = Tensor::zeros(h.rows(), h.cols());
        for v in 0..self.num_nodes {
            for k in offsets[v]..offsets[v + 1] {
                let w = weights[k];
                let src = h.row(cols[k]);
                for (o, &x) in out.row_mut(v).iter_mut().zip(src) {
                    *o += w * x;
                }
            }
        }
        Ok(out)
    }

    /// Dense matrix of the operator; the reference implementation for tests.
    pub fn to_dense(&self) -> Tensor<S> {
        let mut m = Tensor::zeros(self.num_nodes, self.num_nodes);
        for v in 0..self.num_nodes {
            for k in self.offsets[v]..self.offsets[v + 1] {
                let prev = m.get(v, self.cols[k]);
                m.set(v, self.cols[k], prev + self.weights[k]);
            }
        }
        m
    }
}

fn to_csr<S: Scalar>(
    n: usize,
    entries: impl Iterator<Item = (usize, usize, f64)>,
) -> (Vec<usize>, Vec<usize>, Vec<S>) {
    let mut rows: Vec<(usize, usize, f64)> = entries.collect();
    rows.sort_unstable_by_key(|&(r, c, _)| (r, c));
    let mut offsets = vec![0usize; n + 1];
    for &(r, _, _) in &rows {
        offsets[r + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let cols = rows.iter().map(|&(_, c, _)| c).collect();
    let weights = rows.iter().map(|&(_, _, w)| S::from_f64_lossy(w)).collect();
    (offsets, cols, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::adjacency::build_adjacency;
    use crate::rng::Rng;

    fn dense_gcn_oracle(adj: &Adjacency) -> Tensor<f64> {
        let n = adj.num_nodes();
        let deg = adj.degrees();
        Tensor::from_fn(n, n, |v, u| {
            let a_plus_i = f64::from(u == v || adj.neighbors(u).binary_search(&v).is_ok());
            a_plus_i / (deg.renormalized[u] * deg.renormalized[v]).sqrt()
        })
    }

    fn dense_sage_oracle(adj: &Adjacency) -> Tensor<f64> {
        let n = adj.num_nodes();
        let deg = adj.degrees();
        Tensor::from_fn(n, n, |v, u| {
            let a_plus_i = f64::from(u == v || adj.neighbors(u).binary_search(&v).is_ok());
            a_plus_i / deg.renormalized_in[v]
        })
    }

    fn dense_gin_oracle(adj: &Adjacency) -> Tensor<f64> {
        let n = adj.num_nodes();
        Tensor::from_fn(n, n, |v, u| {
            f64::from(adj.neighbors(u).binary_search(&v).is_ok())
        })
    }

    fn random_graph(n: usize, rng: &mut Rng) -> Adjacency {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.next_bool(0.4) {
                    edges.push((u, v));
                }
            }
        }
        build_adjacency(&edges, n, false).unwrap()
    }

    #[test]
    fn sparse_matches_dense_oracle_on_small_graphs() {
        let mut rng = Rng::new(31);
        for instance in 0..50 {
            let n = 2 + rng.next_below(7);
            let adj = random_graph(n, &mut rng);
            let mut h: Tensor<f64> = Tensor::zeros(n, 3);
            for v in h.data_mut() {
                *v = rng.next_normal_f64();
            }
            for (kind, oracle) in [
                (AggKind::Gcn, dense_gcn_oracle(&adj)),
                (AggKind::Sage, dense_sage_oracle(&adj)),
                (AggKind::Gin, dense_gin_oracle(&adj)),
            ] {
                let op: AggOp<f64> = AggOp::new(kind, &adj);
                let sparse = op.apply(&h).unwrap();
                let dense = oracle.matmul(&h);
                let diff = sparse.max_abs_diff(&dense);
                assert!(diff < 1e-12, "instance {instance} kind {kind}: diff {diff}");
                let sparse_t = op.apply_transpose(&h).unwrap();
                let dense_t = oracle.transpose().matmul(&h);
                let diff_t = sparse_t.max_abs_diff(&dense_t);
                assert!(diff_t < 1e-12, "instance {instance} kind {kind} transpose: {diff_t}");
            }
        }
    }

    #[test]
    fn gcn_on_two_node_path() {
        let adj = build_adjacency(&[(0, 1)], 2, false).unwrap();
        let op: AggOp<f64> = AggOp::new(AggKind::Gcn, &adj);
        let h = Tensor::from_vec(2, 1, vec![1.0, 3.0]);
        let out = op.apply(&h).unwrap();
        assert!((out.get(0, 0) - 2.0).abs() < 1e-12);
        assert!((out.get(1, 0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sage_on_two_node_path() {
        let adj = build_adjacency(&[(0, 1)], 2, false).unwrap();
        let op: AggOp<f64> = AggOp::new(AggKind::Sage, &adj);
        let h = Tensor::from_vec(2, 1, vec![1.0, 3.0]);
        let out = op.apply(&h).unwrap();
        assert!((out.get(0, 0) - 2.0).abs() < 1e-12);
        assert!((out.get(1, 0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gin_neighbor_sum_on_two_node_path() {
        let adj = build_adjacency(&[(0, 1)], 2, false).unwrap();
        let op: AggOp<f64> = AggOp::new(AggKind::Gin, &adj);
        let h = Tensor::from_vec(2, 1, vec![1.0, 3.0]);
        let out = op.apply(&h).unwrap();
        // Neighbor sums only; the layer adds (1+ε)·own.
        assert_eq!(out.get(0, 0), 3.0);
        assert_eq!(out.get(1, 0), 1.0);
    }

    #[test]
    fn isolated_node_keeps_its_features_under_gcn_and_sage() {
        let adj = build_adjacency(&[], 1, false).unwrap();
        let h = Tensor::from_vec(1, 2, vec![0.4, -1.5]);
        for kind in [AggKind::Gcn, AggKind::Sage] {
            let op: AggOp<f64> = AggOp::new(kind, &adj);
            let out = op.apply(&h).unwrap();
            assert_eq!(out, h, "kind {kind}");
        }
        let gin: AggOp<f64> = AggOp::new(AggKind::Gin, &adj);
        let out = gin.apply(&h).unwrap();
        assert_eq!(out.data(), &[0.0, 0.0]);
    }

    #[test]
    fn sage_equals_gcn_on_regular_graphs() {
        // On a cycle every renormalized degree is 3, so both operators are
        // (A+I)/3 and the aggregations coincide.
        let n = 6;
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let adj = build_adjacency(&edges, n, false).unwrap();
        let mut rng = Rng::new(5);
        let mut h: Tensor<f64> = Tensor::zeros(n, 2);
        for v in h.data_mut() {
            *v = rng.next_normal_f64();
        }
        let gcn: AggOp<f64> = AggOp::new(AggKind::Gcn, &adj);
        let sage: AggOp<f64> = AggOp::new(AggKind::Sage, &adj);
        let diff = gcn.apply(&h).unwrap().max_abs_diff(&sage.apply(&h).unwrap());
        assert!(diff < 1e-12);
    }

    #[test]
    fn permutation_equivariance() {
        let mut rng = Rng::new(6);
        let n = 7;
        let adj = random_graph(n, &mut rng);
        let perm = {
            let mut p: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut p);
            p
        };
        let permuted_edges: Vec<(usize, usize)> = adj
            .edge_list()
            .into_iter()
            .map(|(u, v)| (perm[u], perm[v]))
            .collect();
        let adj_p = build_adjacency(&permuted_edges, n, false).unwrap();
        let mut h: Tensor<f64> = Tensor::zeros(n, 3);
        for v in h.data_mut() {
            *v = rng.next_normal_f64();
        }
        let h_p = Tensor::from_fn(n, 3, |i, j| {
            let orig = perm.iter().position(|&p| p == i).unwrap();
            h.get(orig, j)
        });
        for kind in [AggKind::Gcn, AggKind::Sage, AggKind::Gin] {
            let out = AggOp::<f64>::new(kind, &adj).apply(&h).unwrap();
            let out_p = AggOp::<f64>::new(kind, &adj_p).apply(&h_p).unwrap();
            for v in 0..n {
                for j in 0..3 {
                    let diff = (out.get(v, j) - out_p.get(perm[v], j)).abs();
                    assert!(diff < 1e-12, "kind {kind} node {v} dim {j}");
                }
            }
        }
    }
}
