//! Graphs, normalized adjacency, edge splits, and a stochastic block model
//! generator.

mod io;
mod normalize;
mod sbm;
mod split;

pub use io::{load_graph, read_features, read_labels, write_edges, write_features, write_labels};
pub use normalize::{normalize, normalize_adjacency, NormalizedAdjacency};
pub use sbm::{generate_sbm, FeatureMode, SbmSpec};
pub use split::{split_edges, EdgeSplit};

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SparseMatrix};

/// Undirected node pair, canonically stored with `.0 < .1`.
pub type Edge = (usize, usize);

/// Orders a pair as `(min, max)`.
#[inline]
pub fn canonical(i: usize, j: usize) -> Edge {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Undirected, unweighted attributed graph.
///
/// The adjacency is symmetric with a zero diagonal and unit weights.
#[derive(Debug, Clone)]
pub struct Graph {
    adjacency: SparseMatrix,
    features: DenseMatrix,
    labels: Option<Vec<usize>>,
    n_classes: Option<usize>,
}

impl Graph {
    /// Builds a graph from an edge list. Self-loops are dropped, duplicates
    /// and reversed duplicates collapse to one undirected edge.
    pub fn from_edges(
        n_nodes: usize,
        edges: impl IntoIterator<Item = Edge>,
        features: DenseMatrix,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if features.rows() != n_nodes {
            return Err(Error::Validation(format!(
                "feature matrix has {} rows for {n_nodes} nodes",
                features.rows()
            )));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i >= n_nodes || j >= n_nodes {
                return Err(Error::Validation(format!(
                    "edge ({i}, {j}) references a node outside 0..{n_nodes}"
                )));
            }
            if i != j {
                set.insert(canonical(i, j));
            }
        }
        let n_classes = match &labels {
            Some(l) => {
                if l.len() != n_nodes {
                    return Err(Error::Validation(format!(
                        "{} labels for {n_nodes} nodes",
                        l.len()
                    )));
                }
                Some(l.iter().max().map_or(0, |&m| m + 1))
            }
            None => None,
        };
        Ok(Self {
            adjacency: symmetric_adjacency(n_nodes, &set),
            features,
            labels,
            n_classes,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn n_classes(&self) -> Option<usize> {
        self.n_classes
    }

    /// Canonical `(i < j)` edges in lexicographic order.
    pub fn edges(&self) -> Vec<Edge> {
        self.adjacency.iter().filter(|&(i, j, _)| i < j).map(|(i, j, _)| (i, j)).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency.contains(i, j)
    }

    /// Copy of the graph with each feature row scaled to sum to one
    /// (all-zero rows stay zero).
    pub fn with_row_normalized_features(&self) -> Self {
        let mut features = self.features.clone();
        for i in 0..features.rows() {
            let row = features.row_mut(i);
            let s: f64 = row.iter().sum();
            if s != 0.0 {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        Self {
            features,
            ..self.clone()
        }
    }
}

/// Symmetric unit-weight adjacency from canonical edges.
pub(crate) fn symmetric_adjacency(n: usize, edges: &BTreeSet<Edge>) -> SparseMatrix {
    SparseMatrix::from_triplets(
        n,
        n,
        edges
            .iter()
            .flat_map(|&(i, j)| [(i, j, 1.0), (j, i, 1.0)]),
    )
    .expect("edges were validated against n")
}
