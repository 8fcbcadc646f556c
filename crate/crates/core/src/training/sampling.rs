use crate::linalg::{DenseMatrix, Rng};
use crate::objectives::PriorSpec;

/// `m` rows drawn uniformly with replacement from `z`. With `m == N` the
/// whole matrix is returned unchanged and no randomness is consumed.
pub fn sample_embedding_batch(z: &DenseMatrix, m: usize, rng: &mut Rng) -> DenseMatrix {
    assert!(m >= 1, "batch size must be at least 1");
    let n = z.rows();
    if m == n {
        return z.clone();
    }
    let idx: Vec<usize> = (0..m).map(|_| rng.index(n)).collect();
    z.select_rows(&idx)
}

/// `m` i.i.d. draws from `N(0, I)`.
pub fn sample_prior_batch(spec: PriorSpec, m: usize, rng: &mut Rng) -> DenseMatrix {
    DenseMatrix::from_fn(m, spec.dim, |_, _| rng.standard_normal())
}
