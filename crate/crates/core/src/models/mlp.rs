//! Two-hidden-layer MLP shared by the Wasserstein critic (linear head) and
//! the adversarial discriminator (sigmoid head):
//!
//! `f(z) = W5 σ(W4 σ(W3 z + b1) + b2) + b3`

use crate::error::{Error, Result};
use crate::linalg::{gemm, gemm_nt, gemm_tn, glorot_init, sigmoid, DenseMatrix, Rng};
use crate::models::ParamSet;

/// Weights are stored output-major: `W3` is `k x e`, `W4` is `l x k`,
/// `W5` is `1 x l`. Biases are row vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub w3: DenseMatrix,
    pub b1: DenseMatrix,
    pub w4: DenseMatrix,
    pub b2: DenseMatrix,
    pub w5: DenseMatrix,
    pub b3: DenseMatrix,
}

impl MlpParams {
    /// Glorot weights (W3, W4, W5 in that order) and zero biases.
    pub fn init(input: usize, hidden1: usize, hidden2: usize, rng: &mut Rng) -> Self {
        let w3 = glorot_init(hidden1, input, rng);
        let w4 = glorot_init(hidden2, hidden1, rng);
        let w5 = glorot_init(1, hidden2, rng);
        Self {
            w3,
            b1: DenseMatrix::zeros(1, hidden1),
            w4,
            b2: DenseMatrix::zeros(1, hidden2),
            w5,
            b3: DenseMatrix::zeros(1, 1),
        }
    }

    pub fn zeros(input: usize, hidden1: usize, hidden2: usize) -> Self {
        Self {
            w3: DenseMatrix::zeros(hidden1, input),
            b1: DenseMatrix::zeros(1, hidden1),
            w4: DenseMatrix::zeros(hidden2, hidden1),
            b2: DenseMatrix::zeros(1, hidden2),
            w5: DenseMatrix::zeros(1, hidden2),
            b3: DenseMatrix::zeros(1, 1),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w3.cols()
    }

    pub fn hidden_dims(&self) -> (usize, usize) {
        (self.w3.rows(), self.w4.rows())
    }
}

const MLP_NAMES: [&str; 6] = ["w3", "b1", "w4", "b2", "w5", "b3"];

impl ParamSet for MlpParams {
    fn names(&self) -> Vec<&'static str> {
        MLP_NAMES.to_vec()
    }
    fn tensors(&self) -> Vec<&DenseMatrix> {
        vec![&self.w3, &self.b1, &self.w4, &self.b2, &self.w5, &self.b3]
    }
    fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix> {
        vec![
            &mut self.w3,
            &mut self.b1,
            &mut self.w4,
            &mut self.b2,
            &mut self.w5,
            &mut self.b3,
        ]
    }
}

/// Gradients share the parameter layout.
pub type MlpGrads = MlpParams;

#[derive(Debug, Clone)]
pub struct MlpCache {
    input: DenseMatrix,
    hidden1: DenseMatrix,
    hidden2: DenseMatrix,
}

fn add_bias(m: &mut DenseMatrix, bias: &DenseMatrix) {
    for i in 0..m.rows() {
        for (v, b) in m.row_mut(i).iter_mut().zip(bias.as_slice()) {
            *v += b;
        }
    }
}

fn mlp_forward(batch: &DenseMatrix, p: &MlpParams, op: &'static str) -> Result<(Vec<f64>, MlpCache)> {
    if batch.cols() != p.input_dim() {
        return Err(Error::shape(
            op,
            format!("batch has {} columns, network expects {}", batch.cols(), p.input_dim()),
        ));
    }
    let mut hidden1 = gemm_nt(batch, &p.w3)?;
    add_bias(&mut hidden1, &p.b1);
    hidden1.map_inplace(sigmoid);
    let mut hidden2 = gemm_nt(&hidden1, &p.w4)?;
    add_bias(&mut hidden2, &p.b2);
    hidden2.map_inplace(sigmoid);
    let mut out = gemm_nt(&hidden2, &p.w5)?;
    add_bias(&mut out, &p.b3);
    Ok((
        out.into_vec(),
        MlpCache {
            input: batch.clone(),
            hidden1,
            hidden2,
        },
    ))
}

/// Given `dL/dscore` per sample, returns parameter gradients and `dL/dinput`.
fn mlp_backward(p: &MlpParams, cache: &MlpCache, upstream: &[f64]) -> Result<(MlpGrads, DenseMatrix)> {
    let m = cache.input.rows();
    if upstream.len() != m {
        return Err(Error::shape(
            "mlp_backward",
            format!("{} upstream values for a batch of {m}", upstream.len()),
        ));
    }
    let d_out = DenseMatrix::from_vec(m, 1, upstream.to_vec())?;
    let w5 = gemm_tn(&d_out, &cache.hidden2)?;
    let b3 = d_out.column_sums();

    let d_h2 = gemm(&d_out, &p.w5)?;
    let d_a2 = d_h2.zip_map(&cache.hidden2, |g, h| g * h * (1.0 - h))?;
    let w4 = gemm_tn(&d_a2, &cache.hidden1)?;
    let b2 = d_a2.column_sums();

    let d_h1 = gemm(&d_a2, &p.w4)?;
    let d_a1 = d_h1.zip_map(&cache.hidden1, |g, h| g * h * (1.0 - h))?;
    let w3 = gemm_tn(&d_a1, &cache.input)?;
    let b1 = d_a1.column_sums();

    let d_input = gemm(&d_a1, &p.w3)?;
    Ok((
        MlpGrads {
            w3,
            b1,
            w4,
            b2,
            w5,
            b3,
        },
        d_input,
    ))
}

/// Wasserstein critic: linear-output MLP whose parameters are kept inside
/// `[-clip, clip]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticParams {
    pub mlp: MlpParams,
    pub clip: f64,
}

impl CriticParams {
    pub fn init(embed: usize, hidden1: usize, hidden2: usize, clip: f64, rng: &mut Rng) -> Self {
        assert!(clip > 0.0, "clip bound must be positive");
        Self {
            mlp: MlpParams::init(embed, hidden1, hidden2, rng),
            clip,
        }
    }

    /// Clamps every weight and bias into `[-clip, clip]`.
    pub fn clip_in_place(&mut self) {
        let c = self.clip;
        for t in self.mlp.tensors_mut() {
            t.map_inplace(|v| v.clamp(-c, c));
        }
    }

    pub fn max_abs_param(&self) -> f64 {
        self.mlp.tensors().iter().map(|t| t.max_abs()).fold(0.0, f64::max)
    }

    pub fn within_clip(&self) -> bool {
        self.mlp
            .tensors()
            .iter()
            .all(|t| t.as_slice().iter().all(|v| v.abs() <= self.clip))
    }

    /// Analytic Lipschitz bound of the critic family under clipping; see
    /// [`lipschitz_bound`].
    pub fn lipschitz_bound(&self) -> f64 {
        let (k, l) = self.mlp.hidden_dims();
        lipschitz_bound(self.clip, self.mlp.input_dim(), k, l)
    }
}

/// Returns a clipped copy.
pub fn clip_params(params: &CriticParams) -> CriticParams {
    let mut p = params.clone();
    p.clip_in_place();
    p
}

/// `c³ · √(k·e) · √(l·k) · √l · (1/4)²`: product of the largest possible
/// Frobenius norms of `W3`, `W4`, `W5` under clipping, times the sigmoid
/// slope bound for each hidden layer.
pub fn lipschitz_bound(clip: f64, embed: usize, hidden1: usize, hidden2: usize) -> f64 {
    let (e, k, l) = (embed as f64, hidden1 as f64, hidden2 as f64);
    clip.powi(3) * (k * e).sqrt() * (l * k).sqrt() * l.sqrt() / 16.0
}

pub fn critic_forward(batch: &DenseMatrix, params: &CriticParams) -> Result<(Vec<f64>, MlpCache)> {
    mlp_forward(batch, &params.mlp, "critic_forward")
}

/// `upstream[i]` is `dL/df(batch_i)`; for the dual objective that is
/// `+1/m` on prior samples and `-1/m` on embedding samples.
pub fn critic_backward(
    params: &CriticParams,
    cache: &MlpCache,
    upstream: &[f64],
) -> Result<(MlpGrads, DenseMatrix)> {
    mlp_backward(&params.mlp, cache, upstream)
}

/// Adversarial discriminator: same MLP, sigmoid output.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorParams {
    pub mlp: MlpParams,
}

impl DiscriminatorParams {
    pub fn init(embed: usize, hidden1: usize, hidden2: usize, rng: &mut Rng) -> Self {
        Self {
            mlp: MlpParams::init(embed, hidden1, hidden2, rng),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiscriminatorCache {
    mlp: MlpCache,
    probs: Vec<f64>,
}

/// Probabilities in `(0, 1)` that each row is a prior sample.
pub fn discriminator_forward(
    batch: &DenseMatrix,
    params: &DiscriminatorParams,
) -> Result<(Vec<f64>, DiscriminatorCache)> {
    let (logits, mlp) = mlp_forward(batch, &params.mlp, "discriminator_forward")?;
    let probs: Vec<f64> = logits.into_iter().map(sigmoid).collect();
    Ok((
        probs.clone(),
        DiscriminatorCache { mlp, probs },
    ))
}

/// `upstream[i]` is `dL/dD(batch_i)`.
pub fn discriminator_backward(
    params: &DiscriminatorParams,
    cache: &DiscriminatorCache,
    upstream: &[f64],
) -> Result<(MlpGrads, DenseMatrix)> {
    if upstream.len() != cache.probs.len() {
        return Err(Error::shape(
            "discriminator_backward",
            format!("{} upstream values for {} outputs", upstream.len(), cache.probs.len()),
        ));
    }
    let d_logits: Vec<f64> = upstream
        .iter()
        .zip(&cache.probs)
        .map(|(g, p)| g * p * (1.0 - p))
        .collect();
    mlp_backward(&params.mlp, &cache.mlp, &d_logits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, finite_diff_gradient, max_relative_error};

    fn batch(m: usize, e: usize, rng: &mut Rng) -> DenseMatrix {
        DenseMatrix::from_fn(m, e, |_, _| rng.standard_normal())
    }

    /// Per-sample scalar evaluation, written independently of the batched path.
    fn score_one(p: &MlpParams, z: &[f64]) -> f64 {
        let (k, l) = p.hidden_dims();
        let h1: Vec<f64> = (0..k).map(|a| sigmoid(dot(p.w3.row(a), z) + p.b1[(0, a)])).collect();
        let h2: Vec<f64> = (0..l).map(|b| sigmoid(dot(p.w4.row(b), &h1) + p.b2[(0, b)])).collect();
        dot(p.w5.row(0), &h2) + p.b3[(0, 0)]
    }

    #[test]
    fn zero_critic_scores_zero() {
        let c = CriticParams {
            mlp: MlpParams::zeros(3, 16, 64),
            clip: 0.01,
        };
        let (s, _) = critic_forward(&batch(5, 3, &mut Rng::new(0)), &c).unwrap();
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_critic() {
        let mut mlp = MlpParams::zeros(3, 4, 6);
        mlp.w5 = DenseMatrix::filled(1, 6, 1.0);
        let c = CriticParams { mlp, clip: 1.0 };
        let (s, _) = critic_forward(&batch(5, 3, &mut Rng::new(1)), &c).unwrap();
        assert!(s.iter().all(|&v| (v - 3.0).abs() < 1e-15));
    }

    #[test]
    fn forward_matches_per_sample_oracle() {
        let mut rng = Rng::new(2);
        let p = MlpParams::init(4, 5, 7, &mut rng);
        let mut p2 = p.clone();
        p2.b1 = DenseMatrix::from_fn(1, 5, |_, _| rng.uniform(-1.0, 1.0));
        p2.b2 = DenseMatrix::from_fn(1, 7, |_, _| rng.uniform(-1.0, 1.0));
        p2.b3 = DenseMatrix::filled(1, 1, 0.3);
        let x = batch(9, 4, &mut rng);
        let (s, _) = critic_forward(&x, &CriticParams { mlp: p2.clone(), clip: 1.0 }).unwrap();
        for (i, &si) in s.iter().enumerate() {
            assert!((si - score_one(&p2, x.row(i))).abs() < 1e-12);
        }
    }

    #[test]
    fn batch_width_checked() {
        let c = CriticParams::init(3, 4, 5, 0.01, &mut Rng::new(0));
        assert!(matches!(critic_forward(&DenseMatrix::zeros(2, 4), &c), Err(Error::Shape { .. })));
    }

    #[test]
    fn identical_batches_cancel() {
        let mut rng = Rng::new(3);
        let c = CriticParams::init(2, 4, 5, 0.5, &mut rng);
        let x = batch(6, 2, &mut rng);
        let both = DenseMatrix::from_rows(
            &(0..12).map(|i| x.row(i % 6).to_vec()).collect::<Vec<_>>(),
        )
        .unwrap();
        let (_, cache) = critic_forward(&both, &c).unwrap();
        let upstream: Vec<f64> = (0..12).map(|i| if i < 6 { 1.0 / 6.0 } else { -1.0 / 6.0 }).collect();
        let (g, _) = critic_backward(&c, &cache, &upstream).unwrap();
        for t in g.tensors() {
            assert!(t.max_abs() < 1e-15, "{t:?}");
        }
    }

    fn weighted_sum(scores: &[f64], w: &[f64]) -> f64 {
        scores.iter().zip(w).map(|(s, w)| s * w).sum()
    }

    #[test]
    fn critic_gradients_match_finite_differences() {
        for seed in 0..10 {
            let mut rng = Rng::new(seed);
            let c = CriticParams::init(3, 4, 5, 1.0, &mut rng);
            let mut c = c;
            c.mlp.b1 = DenseMatrix::from_fn(1, 4, |_, _| rng.uniform(-0.5, 0.5));
            c.mlp.b2 = DenseMatrix::from_fn(1, 5, |_, _| rng.uniform(-0.5, 0.5));
            let x = batch(7, 3, &mut rng);
            let w: Vec<f64> = (0..7).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let (_, cache) = critic_forward(&x, &c).unwrap();
            let (g, d_in) = critic_backward(&c, &cache, &w).unwrap();

            let names = c.mlp.names();
            for (idx, analytic) in g.tensors().into_iter().enumerate() {
                let param = c.mlp.tensors()[idx].clone();
                let numeric = finite_diff_gradient(
                    |t| {
                        let mut probe = c.clone();
                        *probe.mlp.tensors_mut()[idx] = t.clone();
                        weighted_sum(&critic_forward(&x, &probe).unwrap().0, &w)
                    },
                    &param,
                    1e-5,
                );
                let err = max_relative_error(analytic, &numeric, 1e-6);
                assert!(err < 1e-4, "seed {seed} {}: {err}", names[idx]);
            }
            let numeric = finite_diff_gradient(|b| weighted_sum(&critic_forward(b, &c).unwrap().0, &w), &x, 1e-5);
            assert!(max_relative_error(&d_in, &numeric, 1e-6) < 1e-4);
        }
    }

    #[test]
    fn discriminator_range_and_gradients() {
        let z = DiscriminatorParams { mlp: MlpParams::zeros(2, 3, 4) };
        let (p, _) = discriminator_forward(&batch(4, 2, &mut Rng::new(0)), &z).unwrap();
        assert!(p.iter().all(|&v| v == 0.5));

        for seed in 0..5 {
            let mut rng = Rng::new(seed);
            let d = DiscriminatorParams::init(3, 4, 5, &mut rng);
            let x = batch(8, 3, &mut rng).scaled(3.0);
            let (p, cache) = discriminator_forward(&x, &d).unwrap();
            assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
            let w: Vec<f64> = (0..8).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let (g, d_in) = discriminator_backward(&d, &cache, &w).unwrap();
            for (idx, analytic) in g.tensors().into_iter().enumerate() {
                let param = d.mlp.tensors()[idx].clone();
                let numeric = finite_diff_gradient(
                    |t| {
                        let mut probe = d.clone();
                        *probe.mlp.tensors_mut()[idx] = t.clone();
                        weighted_sum(&discriminator_forward(&x, &probe).unwrap().0, &w)
                    },
                    &param,
                    1e-5,
                );
                assert!(max_relative_error(analytic, &numeric, 1e-6) < 1e-4);
            }
            let numeric =
                finite_diff_gradient(|b| weighted_sum(&discriminator_forward(b, &d).unwrap().0, &w), &x, 1e-5);
            assert!(max_relative_error(&d_in, &numeric, 1e-6) < 1e-4);
        }
    }

    #[test]
    fn clipping() {
        let mut c = CriticParams::init(2, 3, 4, 0.01, &mut Rng::new(0));
        c.mlp.w3[(0, 0)] = 0.5;
        c.mlp.b3[(0, 0)] = -0.7;
        c.mlp.w4[(1, 1)] = 0.004;
        let clipped = clip_params(&c);
        assert_eq!(clipped.mlp.w3[(0, 0)], 0.01);
        assert_eq!(clipped.mlp.b3[(0, 0)], -0.01);
        assert_eq!(clipped.mlp.w4[(1, 1)], 0.004);
        assert!(clipped.within_clip());
        assert_eq!(clip_params(&clipped), clipped);
    }

    #[test]
    fn clipped_critic_respects_lipschitz_bound() {
        for seed in 0..20 {
            let mut rng = Rng::new(seed);
            let mut c = CriticParams::init(4, 16, 64, 0.01, &mut rng);
            // push weights to the boundary to make the bound nearly tight
            for t in c.mlp.tensors_mut() {
                t.map_inplace(|v| v.signum() * 1.0);
            }
            c.clip_in_place();
            let bound = c.lipschitz_bound();
            for _ in 0..50 {
                let a = batch(1, 4, &mut rng).scaled(3.0);
                let b = batch(1, 4, &mut rng).scaled(3.0);
                let fa = critic_forward(&a, &c).unwrap().0[0];
                let fb = critic_forward(&b, &c).unwrap().0[0];
                let dist = a.zip_map(&b, |x, y| x - y).unwrap().frobenius_norm();
                assert!((fa - fb).abs() <= bound * dist * (1.0 + 1e-12));
            }
        }
    }
}
