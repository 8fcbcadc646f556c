use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

/// Per-seed metric values with their mean and spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_seed: Vec<BTreeMap<String, f64>>,
    pub summary: BTreeMap<String, MetricSummary>,
}

/// Mean and population standard deviation per metric name. A metric
/// missing from some seeds is summarized over the seeds that have it.
pub fn aggregate(per_seed: &[BTreeMap<String, f64>]) -> MetricsReport {
    let mut columns: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for run in per_seed {
        for (k, &v) in run {
            columns.entry(k.as_str()).or_default().push(v);
        }
    }
    let summary = columns
        .into_iter()
        .map(|(k, vals)| {
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            (k.to_string(), MetricSummary { mean, std: var.sqrt() })
        })
        .collect();
    MetricsReport {
        per_seed: per_seed.to_vec(),
        summary,
    }
}

impl MetricSummary {
    /// `mean` as a percentage with one decimal, `std` as a plain fraction:
    /// `92.9 ± 0.003`.
    pub fn table_cell(&self) -> String {
        format!("{:.1} ± {:.3}", 100.0 * self.mean, self.std)
    }
}

impl MetricsReport {
    /// Aligned text table: one header row of metric names and one row of
    /// `mean ± std` cells under a row label.
    pub fn to_table(&self, row_label: &str, metrics: &[&str]) -> String {
        let cells: Vec<String> = metrics
            .iter()
            .map(|m| self.summary.get(*m).map_or_else(|| "-".to_string(), MetricSummary::table_cell))
            .collect();
        let widths: Vec<usize> = metrics.iter().zip(&cells).map(|(m, c)| m.len().max(c.chars().count())).collect();
        let label_w = row_label.len().max(6);
        let mut out = String::new();
        let _ = write!(out, "{:<label_w$}", "Method");
        for (m, w) in metrics.iter().zip(&widths) {
            let _ = write!(out, "  {m:>w$}");
        }
        out.push('\n');
        let _ = write!(out, "{row_label:<label_w$}");
        for (c, w) in cells.iter().zip(&widths) {
            let pad = w.saturating_sub(c.chars().count());
            let _ = write!(out, "  {}{c}", " ".repeat(pad));
        }
        out.push('\n');
        out
    }
}
