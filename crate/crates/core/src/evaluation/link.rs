use crate::error::{Error, Result};
use crate::graph::Edge;
use crate::linalg::{dot, sigmoid, DenseMatrix};

/// Pairs with decoder scores and binary labels, positives first.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEdges {
    pub pairs: Vec<Edge>,
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
}

impl ScoredEdges {
    pub fn from_scores(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::shape(
                "ScoredEdges::from_scores",
                format!("{} scores, {} labels", scores.len(), labels.len()),
            ));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Numeric {
                context: "edge scores".into(),
            });
        }
        Ok(Self {
            pairs: Vec::new(),
            scores,
            labels,
        })
    }

    fn counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l).count();
        (pos, self.labels.len() - pos)
    }
}

/// Scores every pair with `σ(z_i · z_j)`.
pub fn score_edges(z: &DenseMatrix, pos: &[Edge], neg: &[Edge]) -> Result<ScoredEdges> {
    let n = z.rows();
    let mut pairs = Vec::with_capacity(pos.len() + neg.len());
    let mut scores = Vec::with_capacity(pairs.capacity());
    let mut labels = Vec::with_capacity(pairs.capacity());
    for (list, label) in [(pos, true), (neg, false)] {
        for &(i, j) in list {
            if i >= n || j >= n {
                return Err(Error::Validation(format!("pair ({i}, {j}) outside {n} nodes")));
            }
            pairs.push((i, j));
            scores.push(sigmoid(dot(z.row(i), z.row(j))));
            labels.push(label);
        }
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric {
            context: "edge scores".into(),
        });
    }
    Ok(ScoredEdges {
        pairs,
        scores,
        labels,
    })
}

/// Area under the ROC curve in the Mann-Whitney form: the probability that
/// a random positive outscores a random negative, ties counting one half.
pub fn auc(scored: &ScoredEdges) -> Result<f64> {
    let (n_pos, n_neg) = scored.counts();
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "AUC needs both classes ({n_pos} positives, {n_neg} negatives)"
        )));
    }
    let mut order: Vec<usize> = (0..scored.scores.len()).collect();
    order.sort_by(|&a, &b| scored.scores[a].total_cmp(&scored.scores[b]));

    // Sum of midranks (1-based) over positives, accumulated in doubled units
    // so every rank stays an exact integer.
    let mut pos_rank_x2: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scored.scores[order[end]] == scored.scores[order[start]] {
            end += 1;
        }
        let midrank_x2 = (start + 1 + end) as u64;
        let pos_in_group = order[start..end].iter().filter(|&&i| scored.labels[i]).count() as u64;
        pos_rank_x2 += midrank_x2 * pos_in_group;
        start = end;
    }
    let (p, q) = (n_pos as u64, n_neg as u64);
    let u_x2 = pos_rank_x2 - p * (p + 1);
    Ok(u_x2 as f64 / (2 * p * q) as f64)
}

/// Average precision, `Σ_k P@k · Δrecall_k`, over the ranking by descending
/// score. Equal scores keep their input order.
pub fn average_precision(scored: &ScoredEdges) -> Result<f64> {
    let (n_pos, _) = scored.counts();
    if n_pos == 0 {
        return Err(Error::UndefinedMetric("AP needs at least one positive".into()));
    }
    let mut order: Vec<usize> = (0..scored.scores.len()).collect();
    // stable sort: ties stay in pair-index order
    order.sort_by(|&a, &b| scored.scores[b].total_cmp(&scored.scores[a]));
    let mut hits = 0usize;
    let mut ap = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if scored.labels[i] {
            hits += 1;
            ap += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(ap / n_pos as f64)
}
