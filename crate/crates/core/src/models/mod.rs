//! Forward and backward passes for the GCN generator, the inner-product
//! decoder, the Wasserstein critic, and the baseline variational encoder and
//! discriminator.
//!
//! Backward routines are written out by hand for these fixed graphs; each
//! one is checked against central finite differences in the tests.

mod decoder;
mod encoder;
mod mlp;

pub use decoder::decode_logits;
pub use encoder::{
    gcn_backward, gcn_forward, reparameterize, reparameterize_backward, variational_backward,
    variational_forward, EncoderGrads, EncoderParams, GcnCache, GcnInput, VariationalCache,
    VariationalEncoderParams, VariationalGrads, VariationalOutput,
};
pub use mlp::{
    clip_params, critic_backward, critic_forward, discriminator_backward, discriminator_forward,
    lipschitz_bound, CriticParams, DiscriminatorCache, DiscriminatorParams, MlpCache, MlpGrads,
    MlpParams,
};

use serde::{Deserialize, Serialize};

use crate::linalg::DenseMatrix;

/// Output nonlinearity of the final encoder layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinalActivation {
    /// `Z = ReLU(Ā H W2)`, nonnegative embeddings.
    #[default]
    Relu,
    /// `Z = Ā H W2`.
    Linear,
}

/// Node embeddings, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub z: DenseMatrix,
}

/// Ordered, named tensors of a model. The order is fixed and shared between
/// parameters, gradients, optimizer state and checkpoints.
pub trait ParamSet {
    fn names(&self) -> Vec<&'static str>;
    fn tensors(&self) -> Vec<&DenseMatrix>;
    fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix>;

    fn named_tensors(&self) -> Vec<(&'static str, &DenseMatrix)> {
        self.names().into_iter().zip(self.tensors()).collect()
    }

    fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }
}
