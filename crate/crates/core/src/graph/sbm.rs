use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{DenseMatrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMode {
    /// One-hot block membership (`N x blocks`).
    OneHotBlock,
    /// Identity features (`N x N`), i.e. structure only.
    Identity,
}

/// Planted-partition random graph parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub features: FeatureMode,
    pub seed: u64,
}

impl SbmSpec {
    pub fn validate(&self) -> Result<()> {
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return Err(Error::Config("SBM blocks must be non-empty".into()));
        }
        if !(0.0 <= self.p_out && self.p_out <= self.p_in && self.p_in <= 1.0) {
            return Err(Error::Config(format!(
                "SBM probabilities need 0 <= p_out <= p_in <= 1, got p_in={} p_out={}",
                self.p_in, self.p_out
            )));
        }
        Ok(())
    }
}

/// Samples an undirected SBM graph; labels are block ids.
///
/// `p_out == p_in` is accepted so that the label-independent case can be
/// generated.
pub fn generate_sbm(spec: &SbmSpec) -> Result<Graph> {
    spec.validate()?;
    let labels: Vec<usize> = spec
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = labels.len();
    let mut rng = Rng::new(spec.seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { spec.p_in } else { spec.p_out };
            if rng.bernoulli(p) {
                edges.push((i, j));
            }
        }
    }
    let features = match spec.features {
        FeatureMode::Identity => DenseMatrix::identity(n),
        FeatureMode::OneHotBlock => {
            DenseMatrix::from_fn(n, spec.block_sizes.len(), |i, b| f64::from(labels[i] == b))
        }
    };
    Graph::from_edges(n, edges, features, Some(labels))
}
