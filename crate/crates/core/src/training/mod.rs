//! Training loops for WARGA and the GAE, VGAE, ARGA and ARVGA baselines.
//!
//! Every run is single-threaded in semantics and bit-reproducible from
//! `TrainConfig::seed`. Parameters are drawn from one generator in a fixed
//! order (encoder `W1`, `W2`, then critic or discriminator tensors), and the
//! same generator then supplies prior and embedding batches. The first
//! epoch is 1.

mod config;
mod params;
mod sampling;

pub use config::{ModelKind, TrainConfig};
pub use params::{Checkpoint, ModelParams, TensorRecord};
pub use sampling::{sample_embedding_batch, sample_prior_batch};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::link_metrics;
use crate::graph::{normalize_adjacency, EdgeSplit, Graph};
use crate::linalg::{Adam, DenseMatrix, Rng, SparseMatrix};
use crate::models::{
    discriminator_backward, discriminator_forward, gcn_backward, gcn_forward, reparameterize_backward,
    variational_backward, variational_forward, CriticParams, DiscriminatorParams, EncoderGrads, EncoderParams,
    GcnInput, ParamSet, VariationalEncoderParams,
};
use crate::objectives::{
    adversarial_losses, generator_wasserstein_term, kl_standard_normal, recon_loss_from_embedding,
    wasserstein_dual_gradients, warga_total_loss, LossBreakdown, PriorSpec, ReconWeighting,
};

/// Stream ids used with [`Rng::with_stream`]; training itself uses stream 0.
pub const SPLIT_STREAM: u64 = 1;
pub const KMEANS_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: LossBreakdown,
    /// Last dual estimate of the epoch's critic iterations (WARGA).
    pub critic_estimate: Option<f64>,
    /// Discriminator loss before its update (ARGA, ARVGA).
    pub discriminator_loss: Option<f64>,
    pub val_auc: Option<f64>,
    pub val_ap: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub wall_seconds: f64,
    /// Evaluation embedding after the last update (the mean for variational
    /// encoders).
    pub embedding: DenseMatrix,
    pub params: ModelParams,
    pub critic_steps: usize,
    pub discriminator_steps: usize,
    pub generator_steps: usize,
}

/// Hooks called from inside the training loop.
pub trait TrainObserver {
    /// After each critic update and clip.
    fn on_critic_step(&mut self, _epoch: usize, _iteration: usize, _critic: &CriticParams) {}
    /// Discriminator outputs on the prior and embedding batches, before its update.
    fn on_discriminator_step(&mut self, _epoch: usize, _real: &[f64], _fake: &[f64]) {}
    fn on_epoch(&mut self, _record: &EpochRecord) {}
}

pub struct NoObserver;

impl TrainObserver for NoObserver {}

/// Reconstruction target `A_train + I` with its loss weighting.
#[derive(Debug, Clone)]
pub struct ReconTarget {
    pub target: SparseMatrix,
    pub weighting: ReconWeighting,
}

impl ReconTarget {
    pub fn new(train_adjacency: &SparseMatrix, pos_weighting: bool, include_diagonal: bool) -> Result<Self> {
        let n = train_adjacency.rows();
        let triplets: Vec<_> = train_adjacency
            .iter()
            .chain((0..n).map(|i| (i, i, 1.0)))
            .collect();
        let target = SparseMatrix::from_triplets(n, n, triplets)?;
        let weighting = if pos_weighting {
            ReconWeighting::balanced(&target, include_diagonal)
        } else {
            ReconWeighting::unweighted(include_diagonal)
        };
        Ok(Self { target, weighting })
    }
}

/// GCN input built on the training adjacency of `split`.
pub fn training_input(g: &Graph, split: &EdgeSplit) -> Result<GcnInput> {
    if split.train_adjacency.rows() != g.n_nodes() {
        return Err(Error::Validation(format!(
            "split has {} nodes, graph has {}",
            split.train_adjacency.rows(),
            g.n_nodes()
        )));
    }
    GcnInput::new(&normalize_adjacency(&split.train_adjacency), g.features())
}

/// The WARGA generator objective `recon + λ (-mean f(Z))` over all rows of
/// `Z`, with its gradient w.r.t. the encoder weights.
pub fn warga_generator_objective(
    input: &GcnInput,
    encoder: &EncoderParams,
    critic: &CriticParams,
    recon: &ReconTarget,
    lambda: f64,
) -> Result<(LossBreakdown, EncoderGrads)> {
    let (emb, cache) = gcn_forward(input, encoder)?;
    let (loss, d_z) = warga_generator_loss(&emb.z, critic, recon, lambda)?;
    Ok((loss, gcn_backward(input, encoder, &cache, &d_z)?))
}

fn warga_generator_loss(
    z: &DenseMatrix,
    critic: &CriticParams,
    recon: &ReconTarget,
    lambda: f64,
) -> Result<(LossBreakdown, DenseMatrix)> {
    let (rec, mut d_z) = recon_loss_from_embedding(z, &recon.target, &recon.weighting)?;
    let mut neg_mean = 0.0;
    // λ = 0 skips the term outright so the update equals plain GAE bit for bit
    if lambda != 0.0 {
        let (value, d_gen) = generator_wasserstein_term(z, critic)?;
        d_z.axpy(lambda, &d_gen)?;
        neg_mean = value;
    }
    Ok((warga_total_loss(rec, neg_mean, lambda), d_z))
}

/// Converts numeric failures inside an epoch into a divergence report.
fn at(epoch: usize, term: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Numeric { .. } => Error::Diverged { epoch, term },
        other => other,
    }
}

fn check_loss(epoch: usize, loss: &LossBreakdown) -> Result<()> {
    for (term, v) in [
        ("reconstruction", loss.reconstruction),
        ("regularizer", loss.regularizer),
        ("total", loss.total),
    ] {
        if !v.is_finite() {
            return Err(Error::Diverged { epoch, term });
        }
    }
    Ok(())
}

struct Session<'a> {
    cfg: &'a TrainConfig,
    split: &'a EdgeSplit,
    input: GcnInput,
    recon: ReconTarget,
    prior: PriorSpec,
    batch: usize,
    rng: Rng,
    records: Vec<EpochRecord>,
    critic_steps: usize,
    discriminator_steps: usize,
    generator_steps: usize,
}

impl<'a> Session<'a> {
    fn new(g: &Graph, split: &'a EdgeSplit, cfg: &'a TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let input = training_input(g, split)?;
        let recon = ReconTarget::new(&split.train_adjacency, cfg.pos_weighting, cfg.include_diagonal)?;
        Ok(Self {
            cfg,
            split,
            prior: PriorSpec { dim: cfg.embed },
            batch: cfg.batch_rows(g.n_nodes()),
            input,
            recon,
            rng: Rng::new(cfg.seed),
            records: Vec::with_capacity(cfg.epochs),
            critic_steps: 0,
            discriminator_steps: 0,
            generator_steps: 0,
        })
    }

    fn n_nodes(&self) -> f64 {
        self.input.n_nodes() as f64
    }

    fn record(
        &mut self,
        observer: &mut dyn TrainObserver,
        epoch: usize,
        loss: LossBreakdown,
        eval_z: &DenseMatrix,
        critic_estimate: Option<f64>,
        discriminator_loss: Option<f64>,
    ) -> Result<()> {
        check_loss(epoch, &loss)?;
        let (val_auc, val_ap) = if self.cfg.evaluates_at(epoch) {
            let (auc, ap) = link_metrics(eval_z, &self.split.val_pos, &self.split.val_neg).map_err(at(epoch, "embedding"))?;
            log::debug!(
                "{} epoch {epoch}: loss {:.5} val auc {auc:.4} ap {ap:.4}",
                self.cfg.model,
                loss.total
            );
            (Some(auc), Some(ap))
        } else {
            (None, None)
        };
        let rec = EpochRecord {
            epoch,
            loss,
            critic_estimate,
            discriminator_loss,
            val_auc,
            val_ap,
        };
        observer.on_epoch(&rec);
        self.records.push(rec);
        Ok(())
    }

    /// One discriminator update on fresh prior and embedding batches.
    fn discriminator_round(
        &mut self,
        observer: &mut dyn TrainObserver,
        epoch: usize,
        z: &DenseMatrix,
        disc: &mut DiscriminatorParams,
        adam: &mut Adam,
    ) -> Result<f64> {
        let r = sample_prior_batch(self.prior, self.batch, &mut self.rng);
        let zb = sample_embedding_batch(z, self.batch, &mut self.rng);
        let (pr, cache_r) = discriminator_forward(&r, disc)?;
        let (pz, cache_z) = discriminator_forward(&zb, disc)?;
        observer.on_discriminator_step(epoch, &pr, &pz);
        let adv = adversarial_losses(&pr, &pz)?;
        if !adv.discriminator.is_finite() {
            return Err(Error::Diverged {
                epoch,
                term: "discriminator",
            });
        }
        let (mut grads, _) = discriminator_backward(disc, &cache_r, &adv.d_disc_real)?;
        let (grads_z, _) = discriminator_backward(disc, &cache_z, &adv.d_disc_fake)?;
        for (g, gz) in grads.tensors_mut().into_iter().zip(grads_z.tensors()) {
            g.add_assign(gz)?;
        }
        adam.step(disc.mlp.tensors_mut(), grads.tensors())
            .map_err(at(epoch, "discriminator"))?;
        self.discriminator_steps += 1;
        Ok(adv.discriminator)
    }

    fn finish(self, start: Instant, params: ModelParams) -> Result<TrainReport> {
        let embedding = params.embed(&self.input)?;
        let wall_seconds = start.elapsed().as_secs_f64();
        log::info!(
            "{} finished {} epochs in {wall_seconds:.2}s",
            self.cfg.model,
            self.records.len()
        );
        Ok(TrainReport {
            epochs: self.records,
            wall_seconds,
            embedding,
            params,
            critic_steps: self.critic_steps,
            discriminator_steps: self.discriminator_steps,
            generator_steps: self.generator_steps,
        })
    }
}

/// Generator term of the non-saturating adversarial loss on all rows of `z`.
fn adversarial_generator_term(z: &DenseMatrix, disc: &DiscriminatorParams) -> Result<(f64, DenseMatrix)> {
    let (p, cache) = discriminator_forward(z, disc)?;
    // only the generator half of the pair is used
    let adv = adversarial_losses(&p, &p)?;
    let (_, d_z) = discriminator_backward(disc, &cache, &adv.d_gen_fake)?;
    Ok((adv.generator, d_z))
}

pub fn train(g: &Graph, split: &EdgeSplit, cfg: &TrainConfig) -> Result<TrainReport> {
    train_with_observer(g, split, cfg, &mut NoObserver)
}

pub fn train_with_observer(
    g: &Graph,
    split: &EdgeSplit,
    cfg: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<TrainReport> {
    match cfg.model {
        ModelKind::Warga => run_warga(g, split, cfg, observer),
        ModelKind::Gae | ModelKind::Arga => run_gcn_baseline(g, split, cfg, observer),
        ModelKind::Vgae | ModelKind::Arvga => run_variational_baseline(g, split, cfg, observer),
    }
}

/// WARGA: per epoch, encode `Z`; K times {draw `m` prior and `m` embedding
/// rows, one Adam ascent step on the dual objective, clip}; then one
/// generator step on `recon - λ mean f(Z)`.
pub fn train_warga(g: &Graph, split: &EdgeSplit, cfg: &TrainConfig) -> Result<TrainReport> {
    if cfg.model != ModelKind::Warga {
        return Err(Error::Config(format!("train_warga called with model {}", cfg.model)));
    }
    train(g, split, cfg)
}

/// GAE (reconstruction only), VGAE (+ KL), ARGA and ARVGA (+ one
/// discriminator step per epoch).
pub fn train_baseline(g: &Graph, split: &EdgeSplit, cfg: &TrainConfig) -> Result<TrainReport> {
    if cfg.model == ModelKind::Warga {
        return Err(Error::Config("train_baseline called with model warga".into()));
    }
    train(g, split, cfg)
}

fn run_warga(g: &Graph, split: &EdgeSplit, cfg: &TrainConfig, observer: &mut dyn TrainObserver) -> Result<TrainReport> {
    let start = Instant::now();
    let mut s = Session::new(g, split, cfg)?;
    let mut encoder = EncoderParams::init(g.n_features(), cfg.hidden, cfg.embed, cfg.final_activation, &mut s.rng);
    let mut critic = CriticParams::init(cfg.embed, cfg.critic_hidden1, cfg.critic_hidden2, cfg.clip, &mut s.rng);
    // start inside the feasible set
    critic.clip_in_place();
    let mut enc_adam = Adam::new(encoder.tensors(), cfg.encoder_adam());
    let mut critic_adam = Adam::new(critic.mlp.tensors(), cfg.critic_adam());

    for epoch in 1..=cfg.epochs {
        let (emb, cache) = gcn_forward(&s.input, &encoder)?;
        let z = emb.z;
        if !z.is_finite() {
            return Err(Error::Diverged { epoch, term: "embedding" });
        }

        let mut estimate = 0.0;
        for iteration in 0..cfg.critic_iters {
            let r = sample_prior_batch(s.prior, s.batch, &mut s.rng);
            let zb = sample_embedding_batch(&z, s.batch, &mut s.rng);
            let dual = wasserstein_dual_gradients(&r, &zb, &critic).map_err(at(epoch, "critic"))?;
            if !dual.value.is_finite() {
                return Err(Error::Diverged { epoch, term: "critic" });
            }
            estimate = dual.value;
            // ascent: step along the negated gradient
            let ascent: Vec<DenseMatrix> = dual.critic.tensors().iter().map(|t| t.scaled(-1.0)).collect();
            critic_adam
                .step(critic.mlp.tensors_mut(), ascent.iter().collect())
                .map_err(at(epoch, "critic"))?;
            critic.clip_in_place();
            debug_assert!(critic.within_clip());
            s.critic_steps += 1;
            observer.on_critic_step(epoch, iteration, &critic);
        }

        let (loss, d_z) = warga_generator_loss(&z, &critic, &s.recon, cfg.lambda).map_err(at(epoch, "reconstruction"))?;
        check_loss(epoch, &loss)?;
        let grads = gcn_backward(&s.input, &encoder, &cache, &d_z)?;
        enc_adam
            .step(encoder.tensors_mut(), grads.tensors())
            .map_err(at(epoch, "generator"))?;
        s.generator_steps += 1;
        s.record(observer, epoch, loss, &z, Some(estimate), None)?;
    }
    s.finish(start, ModelParams::Warga { encoder, critic })
}

fn run_gcn_baseline(
    g: &Graph,
    split: &EdgeSplit,
    cfg: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<TrainReport> {
    let start = Instant::now();
    let mut s = Session::new(g, split, cfg)?;
    let mut encoder = EncoderParams::init(g.n_features(), cfg.hidden, cfg.embed, cfg.final_activation, &mut s.rng);
    let mut disc = (cfg.model == ModelKind::Arga)
        .then(|| DiscriminatorParams::init(cfg.embed, cfg.critic_hidden1, cfg.critic_hidden2, &mut s.rng));
    let mut enc_adam = Adam::new(encoder.tensors(), cfg.encoder_adam());
    let mut disc_adam = disc.as_ref().map(|d| Adam::new(d.mlp.tensors(), cfg.critic_adam()));

    for epoch in 1..=cfg.epochs {
        let (emb, cache) = gcn_forward(&s.input, &encoder)?;
        let z = emb.z;
        if !z.is_finite() {
            return Err(Error::Diverged { epoch, term: "embedding" });
        }
        let (rec, mut d_z) =
            recon_loss_from_embedding(&z, &s.recon.target, &s.recon.weighting).map_err(at(epoch, "reconstruction"))?;
        let mut regularizer = 0.0;
        let mut disc_loss = None;
        if let (Some(d), Some(adam)) = (disc.as_mut(), disc_adam.as_mut()) {
            disc_loss = Some(s.discriminator_round(observer, epoch, &z, d, adam)?);
            if cfg.lambda != 0.0 {
                let (gen, d_gen) = adversarial_generator_term(&z, d)?;
                d_z.axpy(cfg.lambda, &d_gen)?;
                regularizer = cfg.lambda * gen;
            }
        }
        let loss = LossBreakdown {
            reconstruction: rec,
            regularizer,
            total: rec + regularizer,
        };
        check_loss(epoch, &loss)?;
        let grads = gcn_backward(&s.input, &encoder, &cache, &d_z)?;
        enc_adam
            .step(encoder.tensors_mut(), grads.tensors())
            .map_err(at(epoch, "generator"))?;
        s.generator_steps += 1;
        s.record(observer, epoch, loss, &z, None, disc_loss)?;
    }
    let params = match disc {
        Some(discriminator) => ModelParams::Arga { encoder, discriminator },
        None => ModelParams::Gae { encoder },
    };
    s.finish(start, params)
}

fn run_variational_baseline(
    g: &Graph,
    split: &EdgeSplit,
    cfg: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<TrainReport> {
    let start = Instant::now();
    let mut s = Session::new(g, split, cfg)?;
    let mut encoder = VariationalEncoderParams::init(g.n_features(), cfg.hidden, cfg.embed, &mut s.rng);
    let mut disc = (cfg.model == ModelKind::Arvga)
        .then(|| DiscriminatorParams::init(cfg.embed, cfg.critic_hidden1, cfg.critic_hidden2, &mut s.rng));
    let mut enc_adam = Adam::new(encoder.tensors(), cfg.encoder_adam());
    let mut disc_adam = disc.as_ref().map(|d| Adam::new(d.mlp.tensors(), cfg.critic_adam()));

    for epoch in 1..=cfg.epochs {
        let out = variational_forward(&s.input, &encoder, &mut s.rng)?;
        if !out.z.is_finite() {
            return Err(Error::Diverged { epoch, term: "embedding" });
        }
        let (rec, mut d_z) =
            recon_loss_from_embedding(&out.z, &s.recon.target, &s.recon.weighting).map_err(at(epoch, "reconstruction"))?;
        let mut regularizer = 0.0;
        let mut disc_loss = None;
        if let (Some(d), Some(adam)) = (disc.as_mut(), disc_adam.as_mut()) {
            disc_loss = Some(s.discriminator_round(observer, epoch, &out.z, d, adam)?);
            if cfg.lambda != 0.0 {
                let (gen, d_gen) = adversarial_generator_term(&out.z, d)?;
                d_z.axpy(cfg.lambda, &d_gen)?;
                regularizer += cfg.lambda * gen;
            }
        }
        let (mut d_mu, mut d_logvar) = reparameterize_backward(&d_z, &out.logvar, &out.eps)?;
        if cfg.lambda != 0.0 {
            // the reconstruction is a mean over N² pairs, so the per-node KL
            // enters with an extra 1/N
            let (kl, dmu_kl, dlv_kl) = kl_standard_normal(&out.mu, &out.logvar).map_err(at(epoch, "kl"))?;
            let w = cfg.lambda / s.n_nodes();
            d_mu.axpy(w, &dmu_kl)?;
            d_logvar.axpy(w, &dlv_kl)?;
            regularizer += w * kl;
        }
        let loss = LossBreakdown {
            reconstruction: rec,
            regularizer,
            total: rec + regularizer,
        };
        check_loss(epoch, &loss)?;
        let grads = variational_backward(&s.input, &encoder, &out.cache, &d_mu, &d_logvar)?;
        enc_adam
            .step(encoder.tensors_mut(), grads.tensors())
            .map_err(at(epoch, "generator"))?;
        s.generator_steps += 1;
        s.record(observer, epoch, loss, &out.mu, None, disc_loss)?;
    }
    let params = match disc {
        Some(discriminator) => ModelParams::Arvga { encoder, discriminator },
        None => ModelParams::Vgae { encoder },
    };
    s.finish(start, params)
}
