use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::linalg::{gemm, gemm_nt, gemm_tn, glorot_init, relu, spmm, DenseMatrix, Rng, SparseMatrix};
use crate::models::{Embedding, FinalActivation, ParamSet};

/// Fixed encoder inputs: normalized adjacency and the feature matrix in
/// sparse form (bag-of-words and identity features are mostly zeros).
#[derive(Debug, Clone)]
pub struct GcnInput {
    adjacency: SparseMatrix,
    features: SparseMatrix,
    features_t: SparseMatrix,
}

impl GcnInput {
    pub fn new(adjacency: &NormalizedAdjacency, features: &DenseMatrix) -> Result<Self> {
        let a = &adjacency.matrix;
        if a.rows() != a.cols() || a.rows() != features.rows() {
            return Err(Error::shape(
                "GcnInput::new",
                format!(
                    "adjacency {}x{} with {} feature rows",
                    a.rows(),
                    a.cols(),
                    features.rows()
                ),
            ));
        }
        let features = SparseMatrix::from_dense(features);
        Ok(Self {
            adjacency: a.clone(),
            features_t: features.transpose(),
            features,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    /// `Ā X W`.
    fn propagate_features(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        spmm(&self.adjacency, &spmm(&self.features, w)?)
    }

    /// Gradient of `Ā X W` w.r.t. `W`: `Xᵀ Ā upstream` (Ā is symmetric).
    fn propagate_features_back(&self, upstream: &DenseMatrix) -> Result<DenseMatrix> {
        spmm(&self.features_t, &spmm(&self.adjacency, upstream)?)
    }
}

/// Two-layer GCN weights: `W1` (c x d) and `W2` (d x e).
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub w1: DenseMatrix,
    pub w2: DenseMatrix,
    pub final_activation: FinalActivation,
}

impl EncoderParams {
    /// Glorot-initialized weights, drawn in the order W1 then W2.
    pub fn init(
        n_features: usize,
        hidden: usize,
        embed: usize,
        final_activation: FinalActivation,
        rng: &mut Rng,
    ) -> Self {
        let w1 = glorot_init(n_features, hidden, rng);
        let w2 = glorot_init(hidden, embed, rng);
        Self {
            w1,
            w2,
            final_activation,
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.w2.cols()
    }
}

impl ParamSet for EncoderParams {
    fn names(&self) -> Vec<&'static str> {
        vec!["encoder.w1", "encoder.w2"]
    }
    fn tensors(&self) -> Vec<&DenseMatrix> {
        vec![&self.w1, &self.w2]
    }
    fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix> {
        vec![&mut self.w1, &mut self.w2]
    }
}

#[derive(Debug, Clone)]
pub struct EncoderGrads {
    pub w1: DenseMatrix,
    pub w2: DenseMatrix,
}

impl ParamSet for EncoderGrads {
    fn names(&self) -> Vec<&'static str> {
        vec!["encoder.w1", "encoder.w2"]
    }
    fn tensors(&self) -> Vec<&DenseMatrix> {
        vec![&self.w1, &self.w2]
    }
    fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix> {
        vec![&mut self.w1, &mut self.w2]
    }
}

/// Pre- and post-activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct GcnCache {
    pub hidden_pre: DenseMatrix,
    pub hidden: DenseMatrix,
    pub output_pre: DenseMatrix,
}

fn check_encoder_shapes(input: &GcnInput, w1: &DenseMatrix, w2_rows: usize) -> Result<()> {
    if w1.rows() != input.n_features() || w1.cols() != w2_rows {
        return Err(Error::shape(
            "gcn_forward",
            format!(
                "features {}x{}, W1 {}x{}, second layer with {} rows",
                input.n_nodes(),
                input.n_features(),
                w1.rows(),
                w1.cols(),
                w2_rows
            ),
        ));
    }
    Ok(())
}

fn first_layer(input: &GcnInput, w1: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let hidden_pre = input.propagate_features(w1)?;
    let hidden = hidden_pre.map(relu);
    Ok((hidden_pre, hidden))
}

/// `Z = act(Ā ReLU(Ā X W1) W2)`.
pub fn gcn_forward(input: &GcnInput, params: &EncoderParams) -> Result<(Embedding, GcnCache)> {
    check_encoder_shapes(input, &params.w1, params.w2.rows())?;
    let (hidden_pre, hidden) = first_layer(input, &params.w1)?;
    let output_pre = spmm(&input.adjacency, &gemm(&hidden, &params.w2)?)?;
    let z = match params.final_activation {
        FinalActivation::Relu => output_pre.map(relu),
        FinalActivation::Linear => output_pre.clone(),
    };
    Ok((
        Embedding { z },
        GcnCache {
            hidden_pre,
            hidden,
            output_pre,
        },
    ))
}

/// Zeroes `upstream` wherever the ReLU input was not positive.
fn relu_gate(upstream: &DenseMatrix, pre: &DenseMatrix) -> Result<DenseMatrix> {
    upstream.zip_map(pre, |g, p| if p > 0.0 { g } else { 0.0 })
}

/// Backpropagates through the shared first layer given `dL/dH1`.
fn first_layer_backward(
    input: &GcnInput,
    hidden_pre: &DenseMatrix,
    d_hidden: &DenseMatrix,
) -> Result<DenseMatrix> {
    let d_hidden_pre = relu_gate(d_hidden, hidden_pre)?;
    input.propagate_features_back(&d_hidden_pre)
}

/// Gradients of a second GCN layer `P = Ā H W` given `dL/dP`:
/// returns `(dW, Ā dP)` so callers can form `dH = (Ā dP) Wᵀ`.
fn second_layer_backward(
    input: &GcnInput,
    hidden: &DenseMatrix,
    d_pre: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let a_d = spmm(&input.adjacency, d_pre)?;
    Ok((gemm_tn(hidden, &a_d)?, a_d))
}

pub fn gcn_backward(
    input: &GcnInput,
    params: &EncoderParams,
    cache: &GcnCache,
    d_z: &DenseMatrix,
) -> Result<EncoderGrads> {
    d_z.check_same_shape(&cache.output_pre, "gcn_backward")?;
    let d_out_pre = match params.final_activation {
        FinalActivation::Relu => relu_gate(d_z, &cache.output_pre)?,
        FinalActivation::Linear => d_z.clone(),
    };
    let (w2, a_d) = second_layer_backward(input, &cache.hidden, &d_out_pre)?;
    let d_hidden = gemm_nt(&a_d, &params.w2)?;
    let w1 = first_layer_backward(input, &cache.hidden_pre, &d_hidden)?;
    Ok(EncoderGrads { w1, w2 })
}

/// Variational encoder: shared first layer, linear mean and log-variance
/// heads.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalEncoderParams {
    pub w1: DenseMatrix,
    pub w2_mu: DenseMatrix,
    pub w2_logvar: DenseMatrix,
}

impl VariationalEncoderParams {
    /// Draws W1, then the mean head, then the log-variance head.
    pub fn init(n_features: usize, hidden: usize, embed: usize, rng: &mut Rng) -> Self {
        let w1 = glorot_init(n_features, hidden, rng);
        let w2_mu = glorot_init(hidden, embed, rng);
        let w2_logvar = glorot_init(hidden, embed, rng);
        Self {
            w1,
            w2_mu,
            w2_logvar,
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.w2_mu.cols()
    }
}

impl ParamSet for VariationalEncoderParams {
    fn names(&self) -> Vec<&'static str> {
        vec!["encoder.w1", "encoder.w2_mu", "encoder.w2_logvar"]
    }
    fn tensors(&self) -> Vec<&DenseMatrix> {
        vec![&self.w1, &self.w2_mu, &self.w2_logvar]
    }
    fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix> {
        vec![&mut self.w1, &mut self.w2_mu, &mut self.w2_logvar]
    }
}

#[derive(Debug, Clone)]
pub struct VariationalGrads {
    pub w1: DenseMatrix,
    pub w2_mu: DenseMatrix,
    pub w2_logvar: DenseMatrix,
}

impl ParamSet for VariationalGrads {
    fn names(&self) -> Vec<&'static str> {
        vec!["encoder.w1", "encoder.w2_mu", "encoder.w2_logvar"]
    }
    fn tensors(&self) -> Vec<&DenseMatrix> {
        vec![&self.w1, &self.w2_mu, &self.w2_logvar]
    }
    fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix> {
        vec![&mut self.w1, &mut self.w2_mu, &mut self.w2_logvar]
    }
}

#[derive(Debug, Clone)]
pub struct VariationalCache {
    pub hidden_pre: DenseMatrix,
    pub hidden: DenseMatrix,
}

#[derive(Debug, Clone)]
pub struct VariationalOutput {
    pub mu: DenseMatrix,
    pub logvar: DenseMatrix,
    /// Standard normal noise used for `z`.
    pub eps: DenseMatrix,
    pub z: DenseMatrix,
    pub cache: VariationalCache,
}

/// `z = mu + exp(logvar / 2) * eps`.
pub fn reparameterize(mu: &DenseMatrix, logvar: &DenseMatrix, eps: &DenseMatrix) -> Result<DenseMatrix> {
    mu.check_same_shape(logvar, "reparameterize")?;
    mu.check_same_shape(eps, "reparameterize")?;
    let std = logvar.map(|lv| (0.5 * lv).exp());
    let noise = std.zip_map(eps, |s, e| s * e)?;
    mu.zip_map(&noise, |m, n| m + n)
}

/// Maps `dL/dz` to `(dL/dmu, dL/dlogvar)` through the reparameterization.
pub fn reparameterize_backward(
    d_z: &DenseMatrix,
    logvar: &DenseMatrix,
    eps: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let scale = logvar.zip_map(eps, |lv, e| 0.5 * (0.5 * lv).exp() * e)?;
    let d_logvar = d_z.zip_map(&scale, |g, s| g * s)?;
    Ok((d_z.clone(), d_logvar))
}

/// Encodes `mu` and `logvar`, then draws one reparameterized sample per node.
pub fn variational_forward(
    input: &GcnInput,
    params: &VariationalEncoderParams,
    rng: &mut Rng,
) -> Result<VariationalOutput> {
    check_encoder_shapes(input, &params.w1, params.w2_mu.rows())?;
    params
        .w2_mu
        .check_same_shape(&params.w2_logvar, "variational_forward")?;
    let (hidden_pre, hidden) = first_layer(input, &params.w1)?;
    let mu = spmm(&input.adjacency, &gemm(&hidden, &params.w2_mu)?)?;
    let logvar = spmm(&input.adjacency, &gemm(&hidden, &params.w2_logvar)?)?;
    let eps = DenseMatrix::from_fn(mu.rows(), mu.cols(), |_, _| rng.standard_normal());
    let z = reparameterize(&mu, &logvar, &eps)?;
    Ok(VariationalOutput {
        mu,
        logvar,
        eps,
        z,
        cache: VariationalCache { hidden_pre, hidden },
    })
}

/// Gradients given total upstream `dL/dmu` and `dL/dlogvar` (sampling path
/// and any direct terms such as KL already summed by the caller).
pub fn variational_backward(
    input: &GcnInput,
    params: &VariationalEncoderParams,
    cache: &VariationalCache,
    d_mu: &DenseMatrix,
    d_logvar: &DenseMatrix,
) -> Result<VariationalGrads> {
    let (w2_mu, a_dmu) = second_layer_backward(input, &cache.hidden, d_mu)?;
    let (w2_logvar, a_dlv) = second_layer_backward(input, &cache.hidden, d_logvar)?;
    let mut d_hidden = gemm_nt(&a_dmu, &params.w2_mu)?;
    d_hidden.add_assign(&gemm_nt(&a_dlv, &params.w2_logvar)?)?;
    let w1 = first_layer_backward(input, &cache.hidden_pre, &d_hidden)?;
    Ok(VariationalGrads {
        w1,
        w2_mu,
        w2_logvar,
    })
}
