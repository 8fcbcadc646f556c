use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Compressed sparse row matrix.
///
/// Within each row, column indices are strictly increasing and no stored
/// value is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from `(row, col, value)` triplets. Duplicates are summed and
    /// entries that end up zero are dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, v) in &entries {
            if r >= rows || c >= cols {
                return Err(Error::shape(
                    "SparseMatrix::from_triplets",
                    format!("entry ({r}, {c}) outside {rows}x{cols}"),
                ));
            }
            if !v.is_finite() {
                return Err(Error::Numeric {
                    context: format!("sparse entry ({r}, {c})"),
                });
            }
        }
        // Stable sort keeps the summation order of duplicates deterministic.
        entries.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut it = entries.into_iter().peekable();
        while let Some((r, c, mut v)) = it.next() {
            while let Some(&(r2, c2, v2)) = it.peek() {
                if (r2, c2) != (r, c) {
                    break;
                }
                v += v2;
                it.next();
            }
            if v != 0.0 {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
            }
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_dense(d: &DenseMatrix) -> Self {
        let mut row_ptr = Vec::with_capacity(d.rows() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..d.rows() {
            for (j, &v) in d.row(i).iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows: d.rows(),
            cols: d.cols(),
            row_ptr,
            col_idx,
            values,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.row(i).0.binary_search(&j).is_ok()
    }

    /// Iterates stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.iter() {
            d[(i, j)] = v;
        }
        d
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // Rows are visited in increasing order, so each output row comes out sorted.
        for (i, j, v) in self.iter() {
            let p = next[j];
            col_idx[p] = i;
            values[p] = v;
            next[j] += 1;
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && self.iter().all(|(i, j, v)| self.get(j, i) == v)
    }
}

/// Sparse-dense product `S * D`, cost proportional to `nnz(S) * D.cols`.
pub fn spmm(s: &SparseMatrix, d: &DenseMatrix) -> Result<DenseMatrix> {
    if s.cols != d.rows() {
        return Err(Error::shape(
            "spmm",
            format!("{}x{} (sparse) * {}x{}", s.rows, s.cols, d.rows(), d.cols()),
        ));
    }
    let mut out = DenseMatrix::zeros(s.rows, d.cols());
    for i in 0..s.rows {
        let (cols, vals) = s.row(i);
        let o_row = out.row_mut(i);
        for (&k, &v) in cols.iter().zip(vals) {
            for (o, &x) in o_row.iter_mut().zip(d.row(k)) {
                *o += v * x;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gemm, Rng};
    use proptest::prelude::*;

    fn random_sparse(n: usize, m: usize, nnz: usize, rng: &mut Rng) -> SparseMatrix {
        let mut trip = Vec::new();
        while trip.len() < nnz {
            let (i, j) = (rng.index(n), rng.index(m));
            if !trip.iter().any(|&(a, b, _)| (a, b) == (i, j)) {
                trip.push((i, j, rng.uniform(-2.0, 2.0)));
            }
        }
        SparseMatrix::from_triplets(n, m, trip).unwrap()
    }

    #[test]
    fn identity_times_dense() {
        let d = DenseMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 - 5.5);
        assert!(spmm(&SparseMatrix::identity(3), &d).unwrap().bit_eq(&d));
    }

    #[test]
    fn zero_sparse_gives_zero() {
        let d = DenseMatrix::filled(3, 2, 7.0);
        let out = spmm(&SparseMatrix::zeros(4, 3), &d).unwrap();
        assert_eq!(out.shape(), (4, 2));
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_densified_product() {
        let mut rng = Rng::new(5);
        let s = random_sparse(5, 5, 8, &mut rng);
        assert_eq!(s.nnz(), 8);
        let d = DenseMatrix::from_fn(5, 4, |_, _| rng.uniform(-1.0, 1.0));
        let a = spmm(&s, &d).unwrap();
        let b = gemm(&s.to_dense(), &d).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch() {
        let s = SparseMatrix::identity(3);
        assert!(matches!(
            spmm(&s, &DenseMatrix::zeros(2, 2)),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn triplets_dedup_and_drop_zeros() {
        let s = SparseMatrix::from_triplets(
            2,
            3,
            vec![(0, 2, 1.0), (0, 0, 2.0), (0, 2, 1.5), (1, 1, 1.0), (1, 1, -1.0)],
        )
        .unwrap();
        assert_eq!(s.nnz(), 2);
        assert_eq!(s.row(0), (&[0usize, 2][..], &[2.0, 2.5][..]));
        assert_eq!(s.row(1).0.len(), 0);
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn transpose_roundtrip() {
        let mut rng = Rng::new(9);
        let s = random_sparse(6, 4, 10, &mut rng);
        assert_eq!(s.transpose().to_dense(), s.to_dense().transpose());
        assert_eq!(s.transpose().transpose(), s);
    }

    proptest! {
        #[test]
        fn spmm_agrees_with_gemm(seed in 0u64..10_000, n in 1usize..50, m in 1usize..50, c in 1usize..8) {
            let mut rng = Rng::new(seed);
            let nnz = rng.index(n * m / 2 + 1);
            let s = random_sparse(n, m, nnz, &mut rng);
            let d = DenseMatrix::from_fn(m, c, |_, _| rng.uniform(-1.0, 1.0));
            let a = spmm(&s, &d).unwrap();
            let b = gemm(&s.to_dense(), &d).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
