//! Numeric kernels: dense and sparse matrices, seeded randomness,
//! initialization, Adam, and a finite-difference gradient oracle.

mod adam;
mod dense;
mod gradcheck;
mod init;
mod rng;
mod sparse;

pub use adam::{adam_step, Adam, AdamConfig, AdamState};
pub use dense::{dot, gemm, gemm_nt, gemm_tn, DenseMatrix};
pub use gradcheck::{finite_diff_gradient, max_relative_error};
pub use init::glorot_init;
pub use rng::Rng;
pub use sparse::{spmm, SparseMatrix};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}
