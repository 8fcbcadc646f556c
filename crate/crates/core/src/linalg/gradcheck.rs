use crate::linalg::DenseMatrix;

/// Central-difference gradient of `loss` at `param`, one entry at a time.
pub fn finite_diff_gradient(
    mut loss: impl FnMut(&DenseMatrix) -> f64,
    param: &DenseMatrix,
    h: f64,
) -> DenseMatrix {
    assert!(h > 0.0, "step must be positive");
    let mut probe = param.clone();
    let mut grad = DenseMatrix::zeros(param.rows(), param.cols());
    for idx in 0..param.len() {
        let orig = probe.as_slice()[idx];
        probe.as_mut_slice()[idx] = orig + h;
        let up = loss(&probe);
        probe.as_mut_slice()[idx] = orig - h;
        let down = loss(&probe);
        probe.as_mut_slice()[idx] = orig;
        grad.as_mut_slice()[idx] = (up - down) / (2.0 * h);
    }
    grad
}

/// Largest entrywise relative error `|a - b| / max(|a|, |b|, floor)`.
///
/// The floor keeps entries whose true gradient is essentially zero from
/// turning round-off into a huge ratio.
pub fn max_relative_error(analytic: &DenseMatrix, numeric: &DenseMatrix, floor: f64) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape());
    analytic
        .as_slice()
        .iter()
        .zip(numeric.as_slice())
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}
