//! CSR adjacency structure and degree computations.

use crate::error::{Error, Result};

/// Sparse adjacency in CSR form over out-neighbors.
///
/// Self-loops are never stored; layers and renormalized degrees add the
/// self-contribution implicitly. Neighbor lists are sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    num_nodes: usize,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    directed: bool,
}

/// Per-node degree counts plus the self-loop-renormalized variants.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector {
    /// Undirected: neighbor count. Directed: in-degree plus out-degree.
    pub total: Vec<usize>,
    pub incoming: Vec<usize>,
    pub outgoing: Vec<usize>,
    /// total + 1 per node.
    pub renormalized: Vec<f64>,
    /// incoming + 1 per node.
    pub renormalized_in: Vec<f64>,
}

/// Builds a CSR adjacency from an edge list.
///
/// Duplicate edges and self-loops are dropped. For undirected graphs both
/// directions of every edge are stored.
pub fn build_adjacency(
    edges: &[(usize, usize)],
    num_nodes: usize,
    directed: bool,
) -> Result<Adjacency> {
    let mut pairs = Vec::with_capacity(if directed { edges.len() } else { 2 * edges.len() });
    for &(u, v) in edges {
        if u >= num_nodes || v >= num_nodes {
            return Err(Error::InvalidInput(format!(
                "edge ({u}, {v}) out of range for {num_nodes} nodes"
            )));
        }
        if u == v {
            continue;
        }
        pairs.push((u, v));
        if !directed {
            pairs.push((v, u));
        }
    }
    pairs.sort_unstable();
    pairs.dedup();

    let mut offsets = vec![0usize; num_nodes + 1];
    for &(u, _) in &pairs {
        offsets[u + 1] += 1;
    }
    for i in 0..num_nodes {
        offsets[i + 1] += offsets[i];
    }
    let neighbors = pairs.into_iter().map(|(_, v)| v).collect();
    Ok(Adjacency {
        num_nodes,
        offsets,
        neighbors,
        directed,
    })
}

impl Adjacency {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Out-neighbors of `v`, sorted ascending.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Number of stored (directed) arcs; an undirected edge counts twice.
    pub fn num_arcs(&self) -> usize {
        self.neighbors.len()
    }

    /// Each stored arc once; for undirected graphs each edge appears once as (min, max).
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.num_nodes {
            for &v in self.neighbors(u) {
                if self.directed || u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Undirected adjacency containing {u, v} iff (u, v) or (v, u) existed.
    pub fn symmetrize(&self) -> Adjacency {
        if !self.directed {
            return self.clone();
        }
        let edges = self.edge_list();
        build_adjacency(&edges, self.num_nodes, false)
            .expect("indices already validated at construction")
    }

    pub fn degrees(&self) -> DegreeVector {
        let n = self.num_nodes;
        let outgoing: Vec<usize> = (0..n).map(|v| self.neighbors(v).len()).collect();
        let incoming = if self.directed {
            let mut inc = vec![0usize; n];
            for &v in &self.neighbors {
                inc[v] += 1;
            }
            inc
        } else {
            outgoing.clone()
        };
        let total: Vec<usize> = if self.directed {
            incoming
                .iter()
                .zip(&outgoing)
                .map(|(&i, &o)| i + o)
                .collect()
        } else {
            outgoing.clone()
        };
        let renormalized = total.iter().map(|&d| d as f64 + 1.0).collect();
        let renormalized_in = incoming.iter().map(|&d| d as f64 + 1.0).collect();
        DegreeVector {
            total,
            incoming,
            outgoing,
            renormalized,
            renormalized_in,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_undirected_edge_is_symmetric() {
        let adj = build_adjacency(&[(0, 1)], 2, false).unwrap();
        assert_eq!(adj.neighbors(0), &[1]);
        assert_eq!(adj.neighbors(1), &[0]);
    }

    #[test]
    fn empty_graph() {
        let adj = build_adjacency(&[], 3, false).unwrap();
        for v in 0..3 {
            assert!(adj.neighbors(v).is_empty());
        }
        assert_eq!(adj.num_arcs(), 0);
    }

    #[test]
    fn directed_dedup() {
        let adj = build_adjacency(&[(0, 1), (0, 1), (1, 2)], 3, true).unwrap();
        assert_eq!(adj.neighbors(0), &[1]);
        assert_eq!(adj.neighbors(1), &[2]);
        assert_eq!(adj.neighbors(2), &[] as &[usize]);
    }

    #[test]
    fn out_of_range_edge_rejected() {
        assert!(build_adjacency(&[(0, 5)], 3, false).is_err());
    }

    #[test]
    fn self_loops_dropped() {
        let adj = build_adjacency(&[(1, 1), (0, 1)], 2, false).unwrap();
        assert_eq!(adj.neighbors(1), &[0]);
    }

    #[test]
    fn symmetrize_directed_cycle_gives_triangle() {
        let adj = build_adjacency(&[(0, 1), (1, 2), (2, 0)], 3, true).unwrap();
        let sym = adj.symmetrize();
        assert!(!sym.is_directed());
        assert_eq!(sym.neighbors(0), &[1, 2]);
        assert_eq!(sym.neighbors(1), &[0, 2]);
        assert_eq!(sym.neighbors(2), &[0, 1]);
    }

    #[test]
    fn symmetrize_is_idempotent() {
        let adj = build_adjacency(&[(0, 1), (2, 1)], 4, true).unwrap();
        let once = adj.symmetrize();
        assert_eq!(once.symmetrize(), once);
        assert_eq!(once.num_nodes(), 4);
    }

    #[test]
    fn degrees_on_star() {
        let adj = build_adjacency(&[(0, 1), (0, 2), (0, 3), (0, 4)], 5, false).unwrap();
        let deg = adj.degrees();
        assert_eq!(deg.total, vec![4, 1, 1, 1, 1]);
        assert_eq!(deg.renormalized[0], 5.0);
        assert_eq!(deg.renormalized[1], 2.0);
    }

    #[test]
    fn degrees_isolated_and_triangle() {
        let adj = build_adjacency(&[(0, 1), (1, 2), (0, 2)], 4, false).unwrap();
        let deg = adj.degrees();
        assert_eq!(deg.total, vec![2, 2, 2, 0]);
        assert_eq!(deg.renormalized[3], 1.0);
    }

    #[test]
    fn directed_degrees_split_in_and_out() {
        let adj = build_adjacency(&[(0, 1), (2, 1)], 3, true).unwrap();
        let deg = adj.degrees();
        assert_eq!(deg.outgoing, vec![1, 0, 1]);
        assert_eq!(deg.incoming, vec![0, 2, 0]);
        assert_eq!(deg.total, vec![1, 2, 1]);
        assert_eq!(deg.renormalized_in, vec![1.0, 3.0, 1.0]);
    }

    #[test]
    fn symmetrized_degree_sum_is_twice_edge_count() {
        let adj = build_adjacency(&[(0, 1), (1, 2), (3, 1), (0, 3)], 5, true).unwrap();
        let sym = adj.symmetrize();
        let deg = sym.degrees();
        let edges = sym.edge_list().len();
        assert_eq!(deg.total.iter().sum::<usize>(), 2 * edges);
    }
}
