//! Link-prediction and node-clustering metrics, plus multi-seed summaries.

mod aggregate;
mod cluster;
mod link;

pub use aggregate::{aggregate, MetricSummary, MetricsReport};
pub use cluster::{
    ari, cluster_and_score, clustering_accuracy, hungarian, kmeans, kmeans_single, nmi,
    ClusterAssignment, ClusterMetrics, KMeansConfig,
};
pub use link::{auc, average_precision, score_edges, ScoredEdges};

use std::collections::BTreeMap;

use crate::error::Result;
use crate::graph::{Edge, EdgeSplit};
use crate::linalg::{DenseMatrix, Rng};

/// AUC and AP of `σ(z_i · z_j)` on held-out positives vs negatives.
pub fn link_metrics(z: &DenseMatrix, pos: &[Edge], neg: &[Edge]) -> Result<(f64, f64)> {
    let scored = score_edges(z, pos, neg)?;
    Ok((auc(&scored)?, average_precision(&scored)?))
}

/// Test-set link metrics (`auc`, `ap`) and, when labels are given,
/// clustering metrics (`acc`, `nmi`, `ari`) of k-means with one cluster per
/// class.
pub fn evaluate_embedding(
    z: &DenseMatrix,
    split: &EdgeSplit,
    labels: Option<(&[usize], usize)>,
    kmeans_rng: &mut Rng,
) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    let (auc, ap) = link_metrics(z, &split.test_pos, &split.test_neg)?;
    out.insert("auc".to_string(), auc);
    out.insert("ap".to_string(), ap);
    if let Some((labels, k)) = labels {
        let (_, m) = cluster_and_score(z, labels, k, kmeans_rng, KMeansConfig::default())?;
        out.insert("acc".to_string(), m.accuracy);
        out.insert("nmi".to_string(), m.nmi);
        out.insert("ari".to_string(), m.ari);
    }
    Ok(out)
}
