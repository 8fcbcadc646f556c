use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::AdamConfig;
use crate::models::FinalActivation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Warga,
    Gae,
    Vgae,
    Arga,
    Arvga,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [Self::Warga, Self::Gae, Self::Vgae, Self::Arga, Self::Arvga];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Warga => "warga",
            Self::Gae => "gae",
            Self::Vgae => "vgae",
            Self::Arga => "arga",
            Self::Arvga => "arvga",
        }
    }

    pub fn is_variational(self) -> bool {
        matches!(self, Self::Vgae | Self::Arvga)
    }

    pub fn is_adversarial(self) -> bool {
        matches!(self, Self::Arga | Self::Arvga)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown model '{s}' (expected warga, gae, vgae, arga or arvga)")))
    }
}

/// Hyper-parameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelKind,
    /// Number of generator updates, T.
    pub epochs: usize,
    /// Critic updates per generator update, K. Ignored by non-Wasserstein models.
    pub critic_iters: usize,
    /// Rows per critic or discriminator batch, m. `None` uses all N nodes.
    pub batch_size: Option<usize>,
    /// First GCN layer width.
    pub hidden: usize,
    /// Embedding width.
    pub embed: usize,
    pub critic_hidden1: usize,
    pub critic_hidden2: usize,
    pub lr_encoder: f64,
    pub lr_critic: f64,
    /// Critic parameters are kept inside `[-clip, clip]`.
    pub clip: f64,
    /// Weight of the regularizer (Wasserstein, KL or adversarial).
    pub lambda: f64,
    pub seed: u64,
    pub final_activation: FinalActivation,
    /// Class-balanced reconstruction loss.
    pub pos_weighting: bool,
    /// Score the `(i, i)` pairs in the reconstruction loss.
    pub include_diagonal: bool,
    /// Validation metrics every this many epochs (and at the last one); 0 disables.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Warga,
            epochs: 200,
            critic_iters: 5,
            batch_size: None,
            hidden: 32,
            embed: 16,
            critic_hidden1: 16,
            critic_hidden2: 64,
            lr_encoder: 0.001,
            lr_critic: 0.001,
            clip: 0.01,
            lambda: 1.0,
            seed: 0,
            final_activation: FinalActivation::Relu,
            pos_weighting: true,
            include_diagonal: true,
            eval_every: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if self.critic_iters == 0 {
            return fail("critic_iters must be at least 1".into());
        }
        if self.batch_size == Some(0) {
            return fail("batch_size must be at least 1".into());
        }
        for (name, w) in [
            ("hidden", self.hidden),
            ("embed", self.embed),
            ("critic_hidden1", self.critic_hidden1),
            ("critic_hidden2", self.critic_hidden2),
        ] {
            if w == 0 {
                return fail(format!("{name} must be at least 1"));
            }
        }
        for (name, v) in [("lr_encoder", self.lr_encoder), ("lr_critic", self.lr_critic), ("clip", self.clip)] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda must be nonnegative, got {}", self.lambda));
        }
        Ok(())
    }

    /// Named schedule for the citation benchmarks: `cora` and `citeseer`
    /// keep the defaults, `pubmed` trains 1500 epochs at learning rate 0.005
    /// for both the encoder and the critic.
    pub fn dataset_profile(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "cora" | "citeseer" => Some(Self::default()),
            "pubmed" => Some(Self {
                epochs: 1500,
                lr_encoder: 0.005,
                lr_critic: 0.005,
                ..Self::default()
            }),
            _ => None,
        }
    }

    pub fn batch_rows(&self, n_nodes: usize) -> usize {
        self.batch_size.unwrap_or(n_nodes)
    }

    pub fn encoder_adam(&self) -> AdamConfig {
        AdamConfig::with_learning_rate(self.lr_encoder)
    }

    pub fn critic_adam(&self) -> AdamConfig {
        AdamConfig::with_learning_rate(self.lr_critic)
    }

    /// Whether validation metrics are computed at `epoch` (1-based).
    pub fn evaluates_at(&self, epoch: usize) -> bool {
        self.eval_every > 0 && (epoch.is_multiple_of(self.eval_every) || epoch == self.epochs)
    }
}
