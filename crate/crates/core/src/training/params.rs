use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::models::{
    gcn_forward, CriticParams, DiscriminatorParams, EncoderParams, FinalActivation, GcnInput, MlpParams,
    ParamSet, VariationalEncoderParams,
};
use crate::training::ModelKind;

/// Final parameters of a trained model.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Warga {
        encoder: EncoderParams,
        critic: CriticParams,
    },
    Gae {
        encoder: EncoderParams,
    },
    Vgae {
        encoder: VariationalEncoderParams,
    },
    Arga {
        encoder: EncoderParams,
        discriminator: DiscriminatorParams,
    },
    Arvga {
        encoder: VariationalEncoderParams,
        discriminator: DiscriminatorParams,
    },
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Warga { .. } => ModelKind::Warga,
            Self::Gae { .. } => ModelKind::Gae,
            Self::Vgae { .. } => ModelKind::Vgae,
            Self::Arga { .. } => ModelKind::Arga,
            Self::Arvga { .. } => ModelKind::Arvga,
        }
    }

    /// The deterministic embedding used for evaluation: `Z` for GCN
    /// encoders, the mean head for variational ones.
    pub fn embed(&self, input: &GcnInput) -> Result<DenseMatrix> {
        let encoder = match self {
            Self::Warga { encoder, .. } | Self::Gae { encoder } | Self::Arga { encoder, .. } => encoder.clone(),
            Self::Vgae { encoder } | Self::Arvga { encoder, .. } => mean_head(encoder),
        };
        Ok(gcn_forward(input, &encoder)?.0.z)
    }

    /// All tensors in checkpoint order.
    pub fn named_tensors(&self) -> Vec<(String, &DenseMatrix)> {
        fn prefixed<'a>(prefix: &str, p: &'a MlpParams) -> Vec<(String, &'a DenseMatrix)> {
            p.named_tensors()
                .into_iter()
                .map(|(n, t)| (format!("{prefix}.{n}"), t))
                .collect()
        }
        fn plain(p: &impl ParamSet) -> Vec<(String, &DenseMatrix)> {
            p.named_tensors().into_iter().map(|(n, t)| (n.to_string(), t)).collect()
        }
        match self {
            Self::Warga { encoder, critic } => [plain(encoder), prefixed("critic", &critic.mlp)].concat(),
            Self::Gae { encoder } => plain(encoder),
            Self::Vgae { encoder } => plain(encoder),
            Self::Arga { encoder, discriminator } => [plain(encoder), prefixed("discriminator", &discriminator.mlp)].concat(),
            Self::Arvga { encoder, discriminator } => {
                [plain(encoder), prefixed("discriminator", &discriminator.mlp)].concat()
            }
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let (final_activation, clip) = match self {
            Self::Warga { encoder, critic } => (Some(encoder.final_activation), Some(critic.clip)),
            Self::Gae { encoder } | Self::Arga { encoder, .. } => (Some(encoder.final_activation), None),
            Self::Vgae { .. } | Self::Arvga { .. } => (None, None),
        };
        Checkpoint {
            model: self.kind(),
            final_activation,
            clip,
            tensors: self
                .named_tensors()
                .into_iter()
                .map(|(name, t)| TensorRecord {
                    name,
                    shape: [t.rows(), t.cols()],
                    values: t.as_slice().to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let get = |name: &str| -> Result<DenseMatrix> {
            let rec = ckpt
                .tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor '{name}'")))?;
            DenseMatrix::from_vec(rec.shape[0], rec.shape[1], rec.values.clone())
                .map_err(|e| Error::Checkpoint(format!("tensor '{name}': {e}")))
        };
        let mlp = |prefix: &str| -> Result<MlpParams> {
            Ok(MlpParams {
                w3: get(&format!("{prefix}.w3"))?,
                b1: get(&format!("{prefix}.b1"))?,
                w4: get(&format!("{prefix}.w4"))?,
                b2: get(&format!("{prefix}.b2"))?,
                w5: get(&format!("{prefix}.w5"))?,
                b3: get(&format!("{prefix}.b3"))?,
            })
        };
        let gcn = || -> Result<EncoderParams> {
            Ok(EncoderParams {
                w1: get("encoder.w1")?,
                w2: get("encoder.w2")?,
                final_activation: ckpt
                    .final_activation
                    .ok_or_else(|| Error::Checkpoint("missing final_activation".into()))?,
            })
        };
        let variational = || -> Result<VariationalEncoderParams> {
            Ok(VariationalEncoderParams {
                w1: get("encoder.w1")?,
                w2_mu: get("encoder.w2_mu")?,
                w2_logvar: get("encoder.w2_logvar")?,
            })
        };
        let params = match ckpt.model {
            ModelKind::Warga => Self::Warga {
                encoder: gcn()?,
                critic: CriticParams {
                    mlp: mlp("critic")?,
                    clip: ckpt.clip.ok_or_else(|| Error::Checkpoint("missing clip".into()))?,
                },
            },
            ModelKind::Gae => Self::Gae { encoder: gcn()? },
            ModelKind::Vgae => Self::Vgae {
                encoder: variational()?,
            },
            ModelKind::Arga => Self::Arga {
                encoder: gcn()?,
                discriminator: DiscriminatorParams {
                    mlp: mlp("discriminator")?,
                },
            },
            ModelKind::Arvga => Self::Arvga {
                encoder: variational()?,
                discriminator: DiscriminatorParams {
                    mlp: mlp("discriminator")?,
                },
            },
        };
        let expected = params.named_tensors().len();
        if ckpt.tensors.len() != expected {
            return Err(Error::Checkpoint(format!(
                "{} tensors for a {} model, expected {expected}",
                ckpt.tensors.len(),
                ckpt.model
            )));
        }
        Ok(params)
    }
}

/// The mean head of a variational encoder as a plain linear GCN.
fn mean_head(p: &VariationalEncoderParams) -> EncoderParams {
    EncoderParams {
        w1: p.w1.clone(),
        w2: p.w2_mu.clone(),
        final_activation: FinalActivation::Linear,
    }
}

/// One named row-major tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: [usize; 2],
    pub values: Vec<f64>,
}

/// On-disk parameter document. Floats round-trip exactly through JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub final_activation: Option<FinalActivation>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub clip: Option<f64>,
    pub tensors: Vec<TensorRecord>,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}
