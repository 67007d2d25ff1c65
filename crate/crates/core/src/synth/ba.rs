//! Preferential-attachment graph growth.

use crate::error::{Error, Result};
use crate::graph::adjacency::{build_adjacency, Adjacency};
use crate::rng::Rng;

/// Grows an undirected graph by preferential attachment.
///
/// Starts from `m` isolated nodes; the first added node connects to all of
/// them, and every later node attaches to `m` distinct existing nodes drawn
/// with probability proportional to current degree. The result always has
/// exactly m·(n − m) edges.
pub fn barabasi_albert(n: usize, m: usize, rng: &mut Rng) -> Result<Adjacency> {
    if m < 1 || m >= n {
        return Err(Error::InvalidInput(format!(
            "attachment parameter m = {m} must satisfy 1 <= m < n = {n}"
        )));
    }
    let mut edges = Vec::with_capacity(m * (n - m));
    // Endpoint pool where each node appears once per unit of degree.
    let mut repeated_nodes: Vec<usize> = Vec::with_capacity(2 * m * (n - m));
    let mut targets: Vec<usize> = (0..m).collect();
    for source in m..n {
        for &t in &targets {
            edges.push((source, t));
        }
        repeated_nodes.extend_from_slice(&targets);
        repeated_nodes.extend(std::iter::repeat(source).take(m));
        if source + 1 < n {
            targets = distinct_degree_weighted(&repeated_nodes, m, rng);
        }
    }
    build_adjacency(&edges, n, false)
}

/// Samples `k` distinct nodes from the degree-weighted pool by rejection.
fn distinct_degree_weighted(pool: &[usize], k: usize, rng: &mut Rng) -> Vec<usize> {
    let mut picked = Vec::with_capacity(k);
    while picked.len() < k {
        let candidate = pool[rng.next_below(pool.len())];
        if !picked.contains(&candidate) {
            picked.push(candidate);
        }
    }
    picked
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_count_identity() {
        let mut rng = Rng::new(1);
        for &(n, m) in &[(30usize, 1usize), (30, 2), (30, 3), (50, 5), (10, 9)] {
            let adj = barabasi_albert(n, m, &mut rng).unwrap();
            assert_eq!(adj.edge_list().len(), m * (n - m), "n={n} m={m}");
        }
    }

    #[test]
    fn m_one_gives_a_tree() {
        let mut rng = Rng::new(2);
        let adj = barabasi_albert(30, 1, &mut rng).unwrap();
        assert_eq!(adj.edge_list().len(), 29);
        // A connected graph with n - 1 edges is a tree; check connectivity.
        let mut seen = vec![false; 30];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &u in adj.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn average_degree_strictly_increases_with_m() {
        let n = 30;
        let mut prev = 0.0;
        for m in 1..=5 {
            let mut rng = Rng::new(3);
            let adj = barabasi_albert(n, m, &mut rng).unwrap();
            let avg = adj.num_arcs() as f64 / n as f64;
            assert!(avg > prev, "m={m}: {avg} <= {prev}");
            let expected = 2.0 * (m * (n - m)) as f64 / n as f64;
            assert!((avg - expected).abs() < 1e-12);
            prev = avg;
        }
    }

    #[test]
    fn invalid_m_rejected() {
        let mut rng = Rng::new(4);
        assert!(barabasi_albert(5, 5, &mut rng).is_err());
        assert!(barabasi_albert(5, 0, &mut rng).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = barabasi_albert(40, 3, &mut Rng::new(9)).unwrap();
        let b = barabasi_albert(40, 3, &mut Rng::new(9)).unwrap();
        assert_eq!(a, b);
    }
}
