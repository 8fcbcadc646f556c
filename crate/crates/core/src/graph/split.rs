use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::{canonical, symmetric_adjacency, Edge, Graph};
use crate::linalg::{Rng, SparseMatrix};

/// Held-out positive and negative pairs for link prediction.
///
/// Positives are removed from `train_adjacency`. Negatives are non-edges of
/// the full graph, so no held-out positive can appear as a negative.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSplit {
    pub train_adjacency: SparseMatrix,
    pub train_edges: Vec<Edge>,
    pub val_pos: Vec<Edge>,
    pub val_neg: Vec<Edge>,
    pub test_pos: Vec<Edge>,
    pub test_neg: Vec<Edge>,
}

/// Uniformly partitions the undirected edges into train/validation/test and
/// draws as many negatives as positives for validation and test.
///
/// Split sizes are `floor(E * frac)`; both held-out sets must be non-empty.
pub fn split_edges(g: &Graph, val_frac: f64, test_frac: f64, rng: &mut Rng) -> Result<EdgeSplit> {
    if !(val_frac > 0.0 && test_frac > 0.0 && val_frac + test_frac < 1.0) {
        return Err(Error::Config(format!(
            "split fractions {val_frac} / {test_frac} must be positive and sum below 1"
        )));
    }
    let mut edges = g.edges();
    let n_val = (edges.len() as f64 * val_frac).floor() as usize;
    let n_test = (edges.len() as f64 * test_frac).floor() as usize;
    if n_val == 0 || n_test == 0 || n_val + n_test >= edges.len() {
        return Err(Error::Sampling(format!(
            "{} edges are too few for a {val_frac}/{test_frac} split",
            edges.len()
        )));
    }

    rng.shuffle(&mut edges);
    let mut val_pos = edges[..n_val].to_vec();
    let mut test_pos = edges[n_val..n_val + n_test].to_vec();
    let mut train_edges = edges[n_val + n_test..].to_vec();
    val_pos.sort_unstable();
    test_pos.sort_unstable();
    train_edges.sort_unstable();

    let negatives = sample_non_edges(g, n_val + n_test, rng)?;
    let val_neg = negatives[..n_val].to_vec();
    let test_neg = negatives[n_val..].to_vec();

    let train_set: BTreeSet<Edge> = train_edges.iter().copied().collect();
    Ok(EdgeSplit {
        train_adjacency: symmetric_adjacency(g.n_nodes(), &train_set),
        train_edges,
        val_pos,
        val_neg,
        test_pos,
        test_neg,
    })
}

/// Distinct canonical non-edges, drawn uniformly without replacement.
fn sample_non_edges(g: &Graph, count: usize, rng: &mut Rng) -> Result<Vec<Edge>> {
    let n = g.n_nodes();
    let total_pairs = n * n.saturating_sub(1) / 2;
    let available = total_pairs - g.n_edges();
    if available < count {
        return Err(Error::Sampling(format!(
            "need {count} negative pairs but the graph has only {available} non-edges"
        )));
    }

    if available <= 4 * count {
        // Dense regime: enumerate and shuffle instead of rejection sampling.
        let mut pool: Vec<Edge> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !g.has_edge(i, j))
            .collect();
        rng.shuffle(&mut pool);
        pool.truncate(count);
        return Ok(pool);
    }

    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let i = rng.index(n);
        let j = rng.index(n);
        if i == j || g.has_edge(i, j) {
            continue;
        }
        let e = canonical(i, j);
        if seen.insert(e) {
            out.push(e);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_sbm, FeatureMode, SbmSpec};
    use crate::linalg::DenseMatrix;

    fn ring(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)), DenseMatrix::identity(n), None).unwrap()
    }

    fn check_invariants(g: &Graph, s: &EdgeSplit) {
        let all: BTreeSet<Edge> = g.edges().into_iter().collect();
        let val: BTreeSet<Edge> = s.val_pos.iter().copied().collect();
        let test: BTreeSet<Edge> = s.test_pos.iter().copied().collect();
        assert_eq!(val.len(), s.val_pos.len());
        assert_eq!(test.len(), s.test_pos.len());
        assert!(val.is_disjoint(&test));
        for e in val.iter().chain(&test) {
            assert!(all.contains(e));
            assert!(!s.train_adjacency.contains(e.0, e.1));
            assert!(!s.train_adjacency.contains(e.1, e.0));
        }
        assert_eq!(s.train_edges.len() + val.len() + test.len(), all.len());
        assert_eq!(s.train_adjacency.nnz(), 2 * s.train_edges.len());
        assert!(s.train_adjacency.is_symmetric());
        assert_eq!(s.val_neg.len(), s.val_pos.len());
        assert_eq!(s.test_neg.len(), s.test_pos.len());
        let negs: BTreeSet<Edge> = s.val_neg.iter().chain(&s.test_neg).copied().collect();
        assert_eq!(negs.len(), s.val_neg.len() + s.test_neg.len());
        for &(i, j) in &negs {
            assert!(i < j);
            assert!(!g.has_edge(i, j));
        }
    }

    #[test]
    fn split_sizes() {
        let g = ring(100);
        assert_eq!(g.n_edges(), 100);
        let s = split_edges(&g, 0.05, 0.10, &mut Rng::new(0)).unwrap();
        assert_eq!((s.val_pos.len(), s.test_pos.len(), s.train_edges.len()), (5, 10, 85));
        check_invariants(&g, &s);
    }

    #[test]
    fn deterministic() {
        let g = ring(60);
        let a = split_edges(&g, 0.1, 0.2, &mut Rng::new(7)).unwrap();
        let b = split_edges(&g, 0.1, 0.2, &mut Rng::new(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invariants_over_seeds() {
        for seed in 0..100 {
            let g = generate_sbm(&SbmSpec {
                block_sizes: vec![15, 15],
                p_in: 0.4,
                p_out: 0.05,
                features: FeatureMode::Identity,
                seed,
            })
            .unwrap();
            let s = split_edges(&g, 0.05, 0.10, &mut Rng::new(seed)).unwrap();
            check_invariants(&g, &s);
        }
    }

    #[test]
    fn dense_graph_uses_enumeration() {
        // K6 minus one edge: a single non-edge exists.
        let edges: Vec<Edge> = (0..6)
            .flat_map(|i| (i + 1..6).map(move |j| (i, j)))
            .filter(|&e| e != (2, 4))
            .collect();
        let g = Graph::from_edges(6, edges, DenseMatrix::identity(6), None).unwrap();
        assert!(matches!(
            split_edges(&g, 0.1, 0.1, &mut Rng::new(0)),
            Err(Error::Sampling(_))
        ));
        let g2 = ring(6);
        let s = split_edges(&g2, 0.2, 0.2, &mut Rng::new(1)).unwrap();
        check_invariants(&g2, &s);
    }

    #[test]
    fn too_small_or_bad_fractions() {
        let g = ring(5);
        assert!(matches!(split_edges(&g, 0.05, 0.1, &mut Rng::new(0)), Err(Error::Sampling(_))));
        assert!(matches!(split_edges(&g, 0.5, 0.5, &mut Rng::new(0)), Err(Error::Config(_))));
        assert!(split_edges(&g, 0.0, 0.5, &mut Rng::new(0)).is_err());
    }
}
