use crate::linalg::{DenseMatrix, Rng};

/// Glorot/Xavier uniform initialization: entries i.i.d. on
/// `[-sqrt(6 / (rows + cols)), +sqrt(6 / (rows + cols))]`.
pub fn glorot_init(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix {
    assert!(rows >= 1 && cols >= 1, "glorot_init needs a non-empty shape");
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    DenseMatrix::from_fn(rows, cols, |_, _| rng.uniform(-bound, bound))
}
