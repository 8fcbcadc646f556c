//! K-means and external clustering agreement scores.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub centroids: DenseMatrix,
    pub inertia: f64,
}

impl ClusterAssignment {
    pub fn n_clusters(&self) -> usize {
        self.centroids.rows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 300,
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + (x - y) * (x - y))
}

/// Nearest centroid (lowest index on ties) and its squared distance.
fn nearest(point: &[f64], centroids: &DenseMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_plus_plus(x: &DenseMatrix, k: usize, rng: &mut Rng) -> DenseMatrix {
    let n = x.rows();
    let mut chosen = vec![rng.index(n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.uniform(0.0, total);
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    pick = i;
                    break;
                }
            }
            // guard against round-off landing on an already-covered point
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            rng.index(n)
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), x.row(next)));
        }
    }
    x.select_rows(&chosen)
}

/// One k-means++ seeded Lloyd run. Returns the assignment and the inertia
/// after every assignment step.
pub fn kmeans_single(x: &DenseMatrix, k: usize, rng: &mut Rng, max_iter: usize) -> Result<(ClusterAssignment, Vec<f64>)> {
    let n = x.rows();
    if k == 0 || k > n {
        return Err(Error::Validation(format!("cannot form {k} clusters from {n} points")));
    }
    x.check_finite("k-means input")?;
    let d = x.cols();
    let mut centroids = kmeans_plus_plus(x, k, rng);
    let mut labels = vec![usize::MAX; n];
    let mut trace = Vec::new();

    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut inertia = 0.0;
        let mut dists = vec![0.0; n];
        for i in 0..n {
            let (c, dist) = nearest(x.row(i), &centroids);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
            dists[i] = dist;
            inertia += dist;
        }
        trace.push(inertia);
        if !changed {
            break;
        }

        let mut sums = DenseMatrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for (s, &v) in sums.row_mut(labels[i]).iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let inv = 1.0 / count as f64;
                for (dst, &s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            } else {
                // re-seed an empty cluster at the point farthest from its centroid
                let far = (0..n)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .expect("n >= 1");
                centroids.row_mut(c).copy_from_slice(x.row(far));
                dists[far] = 0.0;
            }
        }
    }
    let inertia = *trace.last().expect("at least one iteration");
    Ok((
        ClusterAssignment {
            labels,
            centroids,
            inertia,
        },
        trace,
    ))
}

/// Best of `restarts` k-means++ seeded Lloyd runs by final inertia.
pub fn kmeans(x: &DenseMatrix, k: usize, rng: &mut Rng, config: KMeansConfig) -> Result<ClusterAssignment> {
    let mut best: Option<ClusterAssignment> = None;
    for _ in 0..config.restarts.max(1) {
        let (a, _) = kmeans_single(x, k, rng, config.max_iter)?;
        if best.as_ref().is_none_or(|b| a.inertia < b.inertia) {
            best = Some(a);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Contingency counts `table[cluster][class]`.
fn contingency(assignment: &[usize], labels: &[usize]) -> Result<Vec<Vec<u64>>> {
    if assignment.len() != labels.len() {
        return Err(Error::shape(
            "contingency",
            format!("{} assignments, {} labels", assignment.len(), labels.len()),
        ));
    }
    if assignment.is_empty() {
        return Err(Error::UndefinedMetric("empty partition".into()));
    }
    let rows = assignment.iter().max().map_or(0, |&m| m + 1);
    let cols = labels.iter().max().map_or(0, |&m| m + 1);
    let mut t = vec![vec![0u64; cols]; rows];
    for (&a, &l) in assignment.iter().zip(labels) {
        t[a][l] += 1;
    }
    Ok(t)
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with potentials, O(n³)). Returns `col_of_row`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based arrays with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut min_v = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < min_v[j] {
                        min_v[j] = cur;
                        way[j] = j0;
                    }
                    if min_v[j] < delta {
                        delta = min_v[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0; n];
    for j in 1..=n {
        if row_of_col[j] > 0 {
            col_of_row[row_of_col[j] - 1] = j - 1;
        }
    }
    col_of_row
}

/// Best accuracy over one-to-one cluster-to-class mappings.
pub fn clustering_accuracy(assignment: &[usize], labels: &[usize]) -> Result<f64> {
    let table = contingency(assignment, labels)?;
    let size = table.len().max(table[0].len());
    let max = table.iter().flatten().copied().max().unwrap_or(0) as f64;
    let cost: Vec<Vec<f64>> = (0..size)
        .map(|r| {
            (0..size)
                .map(|c| max - table.get(r).and_then(|row| row.get(c)).copied().unwrap_or(0) as f64)
                .collect()
        })
        .collect();
    let matching = hungarian(&cost);
    let matched: u64 = matching
        .iter()
        .enumerate()
        .map(|(r, &c)| table.get(r).and_then(|row| row.get(c)).copied().unwrap_or(0))
        .sum();
    Ok(matched as f64 / assignment.len() as f64)
}

fn entropy(counts: impl Iterator<Item = u64>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `I(U; V) / sqrt(H(U) H(V))` with natural logs; `0/0` is taken as 0.
pub fn nmi(assignment: &[usize], labels: &[usize]) -> Result<f64> {
    let table = contingency(assignment, labels)?;
    let n = assignment.len() as f64;
    let row_sums: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<u64> = (0..table[0].len()).map(|c| table.iter().map(|r| r[c]).sum()).collect();
    let mut mi = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (c, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (row_sums[r] as f64 * col_sums[c] as f64)).ln();
            }
        }
    }
    let hu = entropy(row_sums.into_iter(), n);
    let hv = entropy(col_sums.into_iter(), n);
    let denom = (hu * hv).sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((mi / denom).clamp(0.0, 1.0))
}

fn choose2(x: u64) -> u64 {
    x * x.saturating_sub(1) / 2
}

/// Adjusted Rand index via the pair-counting closed form.
pub fn ari(assignment: &[usize], labels: &[usize]) -> Result<f64> {
    let table = contingency(assignment, labels)?;
    let n = assignment.len() as u64;
    let index: u64 = table.iter().flatten().map(|&c| choose2(c)).sum();
    let sum_rows: u64 = table.iter().map(|r| choose2(r.iter().sum())).sum();
    let sum_cols: u64 = (0..table[0].len())
        .map(|c| choose2(table.iter().map(|r| r[c]).sum()))
        .sum();
    let total = choose2(n) as f64;
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_rows as f64 * sum_cols as f64 / total;
    let max = 0.5 * (sum_rows + sum_cols) as f64;
    if max == expected {
        // both partitions trivial (one cluster each, or all singletons)
        return Ok(1.0);
    }
    Ok((index as f64 - expected) / (max - expected))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterMetrics {
    pub accuracy: f64,
    pub nmi: f64,
    pub ari: f64,
}

/// Clusters `z` into `n_clusters` groups and scores the result against `labels`.
pub fn cluster_and_score(
    z: &DenseMatrix,
    labels: &[usize],
    n_clusters: usize,
    rng: &mut Rng,
    config: KMeansConfig,
) -> Result<(ClusterAssignment, ClusterMetrics)> {
    let a = kmeans(z, n_clusters, rng, config)?;
    let metrics = ClusterMetrics {
        accuracy: clustering_accuracy(&a.labels, labels)?,
        nmi: nmi(&a.labels, labels)?,
        ari: ari(&a.labels, labels)?,
    };
    Ok((a, metrics))
}
