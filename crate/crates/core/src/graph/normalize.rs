use crate::graph::Graph;
use crate::linalg::SparseMatrix;

/// `D^{-1/2} (A + I) D^{-1/2}` where `D` is the degree matrix of `A + I`.
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency {
    pub matrix: SparseMatrix,
}

/// Symmetric normalization with added self-loops. Every node has degree at
/// least one, so this never divides by zero.
pub fn normalize(g: &Graph) -> NormalizedAdjacency {
    normalize_adjacency(g.adjacency())
}

/// Same as [`normalize`] for a bare symmetric adjacency, e.g. the training
/// adjacency of an edge split.
pub fn normalize_adjacency(a: &SparseMatrix) -> NormalizedAdjacency {
    let n = a.rows();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| 1.0 / ((a.row(i).0.len() + 1) as f64).sqrt())
        .collect();
    let mut triplets = Vec::with_capacity(a.nnz() + n);
    for i in 0..n {
        triplets.push((i, i, inv_sqrt[i] * inv_sqrt[i]));
        for &j in a.row(i).0 {
            triplets.push((i, j, inv_sqrt[i] * inv_sqrt[j]));
        }
    }
    NormalizedAdjacency {
        matrix: SparseMatrix::from_triplets(n, n, triplets).expect("indices come from a"),
    }
}
