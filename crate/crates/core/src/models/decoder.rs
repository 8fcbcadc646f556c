use crate::linalg::{gemm_nt, DenseMatrix};

/// Inner-product decoder logits `Z Zᵀ`; link probabilities are the
/// elementwise sigmoid of these.
///
/// Materializes an `N x N` matrix. Training uses the streaming loss in
/// [`crate::objectives::recon_loss_from_embedding`] instead.
pub fn decode_logits(z: &DenseMatrix) -> DenseMatrix {
    gemm_nt(z, z).expect("Z Zᵀ is always conformable")
}
