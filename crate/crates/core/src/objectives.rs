//! Scalar losses and their analytic gradients.
//!
//! Sign conventions: every function returns a quantity to be *minimized*,
//! except [`wasserstein_dual_objective`], which is the critic's estimate of
//! the 1-Wasserstein distance (the critic ascends it).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, sigmoid, softplus, DenseMatrix, SparseMatrix};
use crate::models::{critic_backward, critic_forward, CriticParams, MlpGrads, ParamSet};

/// Standard normal prior over `dim`-dimensional embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PriorSpec {
    pub dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub reconstruction: f64,
    pub regularizer: f64,
    pub total: f64,
}

/// Class-balancing for the adjacency cross-entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconWeighting {
    /// Multiplier on the positive-pair terms.
    pub pos_weight: f64,
    /// Overall scale applied to the mean.
    pub norm: f64,
    /// Whether the `(i, i)` pairs take part in the loss.
    pub include_diagonal: bool,
}

impl ReconWeighting {
    pub fn unweighted(include_diagonal: bool) -> Self {
        Self {
            pos_weight: 1.0,
            norm: 1.0,
            include_diagonal,
        }
    }

    /// `pos_weight = (P - nnz) / nnz`, `norm = P / (2 (P - nnz))`, where `P`
    /// is the number of scored pairs and `nnz` the number of positive ones.
    pub fn balanced(target: &SparseMatrix, include_diagonal: bool) -> Self {
        let n = target.rows();
        let pairs = pair_count(n, include_diagonal);
        let positives = target
            .iter()
            .filter(|&(i, j, _)| include_diagonal || i != j)
            .count() as f64;
        if positives == 0.0 || positives >= pairs {
            return Self::unweighted(include_diagonal);
        }
        Self {
            pos_weight: (pairs - positives) / positives,
            norm: pairs / (2.0 * (pairs - positives)),
            include_diagonal,
        }
    }
}

fn pair_count(n: usize, include_diagonal: bool) -> f64 {
    let n = n as f64;
    if include_diagonal {
        n * n
    } else {
        n * (n - 1.0)
    }
}

/// Loss contribution and `d/dlogit` of one pair, before the `norm / P` scale.
#[inline]
fn bce_term(logit: f64, positive: bool, pos_weight: f64) -> (f64, f64) {
    if positive {
        (pos_weight * softplus(-logit), -pos_weight * sigmoid(-logit))
    } else {
        (softplus(logit), sigmoid(logit))
    }
}

/// Walks row `i` of the target alongside the columns `0..n`, calling
/// `f(j, is_positive)` for each scored pair.
#[inline]
fn for_each_pair(target: &SparseMatrix, i: usize, n: usize, include_diagonal: bool, mut f: impl FnMut(usize, bool)) {
    let cols = target.row(i).0;
    let mut next = 0;
    for j in 0..n {
        let positive = next < cols.len() && cols[next] == j;
        if positive {
            next += 1;
        }
        if include_diagonal || i != j {
            f(j, positive);
        }
    }
}

fn check_target(logits_rows: usize, logits_cols: usize, target: &SparseMatrix, op: &'static str) -> Result<()> {
    if target.rows() != logits_rows || target.cols() != logits_cols || logits_rows != logits_cols {
        return Err(Error::shape(
            op,
            format!(
                "logits {logits_rows}x{logits_cols}, target {}x{}",
                target.rows(),
                target.cols()
            ),
        ));
    }
    Ok(())
}

/// Weighted binary cross-entropy between `σ(logits)` and the 0/1 pattern of
/// `target`, averaged over all scored pairs. Returns `(loss, dL/dlogits)`.
pub fn recon_loss(
    logits: &DenseMatrix,
    target: &SparseMatrix,
    weighting: &ReconWeighting,
) -> Result<(f64, DenseMatrix)> {
    check_target(logits.rows(), logits.cols(), target, "recon_loss")?;
    logits.check_finite("reconstruction logits")?;
    let n = logits.rows();
    let scale = weighting.norm / pair_count(n, weighting.include_diagonal);
    let mut grad = DenseMatrix::zeros(n, n);
    let mut total = 0.0;
    for i in 0..n {
        let mut row_loss = 0.0;
        for_each_pair(target, i, n, weighting.include_diagonal, |j, pos| {
            let (l, g) = bce_term(logits[(i, j)], pos, weighting.pos_weight);
            row_loss += l;
            grad[(i, j)] = scale * g;
        });
        total += row_loss;
    }
    Ok((scale * total, grad))
}

/// Same loss as [`recon_loss`] on `logits = Z Zᵀ`, computed row by row
/// without materializing the `N x N` matrix. Returns `(loss, dL/dZ)`.
///
/// Rows are processed in parallel; per-row partial sums are combined in row
/// order, so the result does not depend on the thread count. `target` must
/// be symmetric.
pub fn recon_loss_from_embedding(
    z: &DenseMatrix,
    target: &SparseMatrix,
    weighting: &ReconWeighting,
) -> Result<(f64, DenseMatrix)> {
    let n = z.rows();
    check_target(n, n, target, "recon_loss_from_embedding")?;
    z.check_finite("embedding")?;
    let e = z.cols();
    let scale = weighting.norm / pair_count(n, weighting.include_diagonal);

    let rows: Vec<(f64, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let zi = z.row(i);
            let mut row_loss = 0.0;
            let mut g_row = vec![0.0; e];
            for_each_pair(target, i, n, weighting.include_diagonal, |j, pos| {
                let zj = z.row(j);
                let (l, g) = bce_term(dot(zi, zj), pos, weighting.pos_weight);
                row_loss += l;
                // logits are symmetric, so dL/dz_i = 2 Σ_j G_ij z_j
                let coeff = 2.0 * scale * g;
                for (acc, &v) in g_row.iter_mut().zip(zj) {
                    *acc += coeff * v;
                }
            });
            (row_loss, g_row)
        })
        .collect();

    let mut total = 0.0;
    let mut grad = Vec::with_capacity(n * e);
    for (l, g) in rows {
        total += l;
        grad.extend(g);
    }
    let loss = scale * total;
    if !loss.is_finite() {
        return Err(Error::Numeric {
            context: "reconstruction loss".into(),
        });
    }
    Ok((loss, DenseMatrix::from_vec(n, e, grad)?))
}

/// KL divergence from `N(mu, exp(logvar))` to `N(0, I)`, summed over
/// dimensions and averaged over nodes. Returns `(kl, dmu, dlogvar)`.
pub fn kl_standard_normal(mu: &DenseMatrix, logvar: &DenseMatrix) -> Result<(f64, DenseMatrix, DenseMatrix)> {
    mu.check_same_shape(logvar, "kl_standard_normal")?;
    let n = mu.rows().max(1) as f64;
    let mut total = 0.0;
    for i in 0..mu.rows() {
        let mut row = 0.0;
        for (&m, &lv) in mu.row(i).iter().zip(logvar.row(i)) {
            row += 1.0 + lv - m * m - lv.exp();
        }
        total += -0.5 * row;
    }
    let d_mu = mu.scaled(1.0 / n);
    let d_logvar = logvar.map(|lv| -0.5 * (1.0 - lv.exp()) / n);
    Ok((total / n, d_mu, d_logvar))
}

pub const LOG_CLAMP: f64 = 1e-12;

/// Discriminator and (non-saturating) generator losses with their gradients
/// w.r.t. the discriminator's output probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialLosses {
    /// `-E[log D(r)] - E[log(1 - D(z))]`
    pub discriminator: f64,
    /// `-E[log D(z)]`
    pub generator: f64,
    pub d_disc_real: Vec<f64>,
    pub d_disc_fake: Vec<f64>,
    pub d_gen_fake: Vec<f64>,
}

pub fn adversarial_losses(real_probs: &[f64], fake_probs: &[f64]) -> Result<AdversarialLosses> {
    if real_probs.is_empty() || fake_probs.is_empty() {
        return Err(Error::shape("adversarial_losses", "empty batch"));
    }
    let clamp = |p: f64| p.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
    let mr = real_probs.len() as f64;
    let mf = fake_probs.len() as f64;

    let mut disc = 0.0;
    let mut d_disc_real = Vec::with_capacity(real_probs.len());
    for &p in real_probs {
        let p = clamp(p);
        disc -= p.ln() / mr;
        d_disc_real.push(-1.0 / (mr * p));
    }
    let mut gen = 0.0;
    let mut d_disc_fake = Vec::with_capacity(fake_probs.len());
    let mut d_gen_fake = Vec::with_capacity(fake_probs.len());
    for &p in fake_probs {
        let p = clamp(p);
        disc -= (1.0 - p).ln() / mf;
        gen -= p.ln() / mf;
        d_disc_fake.push(1.0 / (mf * (1.0 - p)));
        d_gen_fake.push(-1.0 / (mf * p));
    }
    Ok(AdversarialLosses {
        discriminator: disc,
        generator: gen,
        d_disc_real,
        d_disc_fake,
        d_gen_fake,
    })
}

fn check_dual_batches(r: &DenseMatrix, z: &DenseMatrix) -> Result<()> {
    if r.shape() != z.shape() {
        return Err(Error::shape(
            "wasserstein_dual_objective",
            format!("prior batch {}x{}, embedding batch {}x{}", r.rows(), r.cols(), z.rows(), z.cols()),
        ));
    }
    if r.rows() == 0 {
        return Err(Error::shape("wasserstein_dual_objective", "empty batch"));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `mean f(r) - mean f(z)`: the critic's batch estimate of `W1(P_r, P_g)`.
pub fn wasserstein_dual_objective(r: &DenseMatrix, z: &DenseMatrix, critic: &CriticParams) -> Result<f64> {
    check_dual_batches(r, z)?;
    let (fr, _) = critic_forward(r, critic)?;
    let (fz, _) = critic_forward(z, critic)?;
    Ok(mean(&fr) - mean(&fz))
}

/// Dual objective with its gradient w.r.t. the critic parameters and w.r.t.
/// the embedding batch.
#[derive(Debug, Clone)]
pub struct DualGradients {
    pub value: f64,
    pub critic: MlpGrads,
    pub z_batch: DenseMatrix,
}

pub fn wasserstein_dual_gradients(r: &DenseMatrix, z: &DenseMatrix, critic: &CriticParams) -> Result<DualGradients> {
    check_dual_batches(r, z)?;
    let m = r.rows() as f64;
    let (fr, cache_r) = critic_forward(r, critic)?;
    let (fz, cache_z) = critic_forward(z, critic)?;
    let (mut grads, _) = critic_backward(critic, &cache_r, &vec![1.0 / m; r.rows()])?;
    let (grads_z, d_z) = critic_backward(critic, &cache_z, &vec![-1.0 / m; z.rows()])?;
    for (g, gz) in grads.tensors_mut().into_iter().zip(grads_z.tensors()) {
        g.add_assign(gz)?;
    }
    Ok(DualGradients {
        value: mean(&fr) - mean(&fz),
        critic: grads,
        z_batch: d_z,
    })
}

/// The generator's share of the Wasserstein term, `-mean f(z)` over the
/// given rows, with its gradient w.r.t. those rows. `E[f(r)]` is constant
/// in the encoder weights and is left out.
pub fn generator_wasserstein_term(z: &DenseMatrix, critic: &CriticParams) -> Result<(f64, DenseMatrix)> {
    if z.rows() == 0 {
        return Err(Error::shape("generator_wasserstein_term", "empty batch"));
    }
    let m = z.rows() as f64;
    let (fz, cache) = critic_forward(z, critic)?;
    let (_, d_z) = critic_backward(critic, &cache, &vec![-1.0 / m; z.rows()])?;
    Ok((-mean(&fz), d_z))
}

/// Generator objective: `recon + λ · (-mean f(z))`.
pub fn warga_total_loss(reconstruction: f64, neg_mean_fake_score: f64, lambda: f64) -> LossBreakdown {
    let regularizer = if lambda == 0.0 { 0.0 } else { lambda * neg_mean_fake_score };
    LossBreakdown {
        reconstruction,
        regularizer,
        total: reconstruction + regularizer,
    }
}

/// Exact 1-Wasserstein distance between two equal-size 1-D empirical
/// distributions: mean absolute difference of the sorted samples.
pub fn w1_empirical_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::shape(
            "w1_empirical_1d",
            format!("{} vs {} samples", a.len(), b.len()),
        ));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}
