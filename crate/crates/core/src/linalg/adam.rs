use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators for one parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    first_moment: DenseMatrix,
    second_moment: DenseMatrix,
    step: u64,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize, config: AdamConfig) -> Self {
        Self {
            config,
            first_moment: DenseMatrix::zeros(rows, cols),
            second_moment: DenseMatrix::zeros(rows, cols),
            step: 0,
        }
    }

    pub fn for_param(param: &DenseMatrix, config: AdamConfig) -> Self {
        Self::new(param.rows(), param.cols(), config)
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(param: &mut DenseMatrix, grad: &DenseMatrix, state: &mut AdamState) -> Result<()> {
    param.check_same_shape(grad, "adam_step")?;
    param.check_same_shape(&state.first_moment, "adam_step (state)")?;
    grad.check_finite("adam_step gradient")?;

    state.step += 1;
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = state.step as i32;
    let correction1 = 1.0 - beta1.powi(t);
    let correction2 = 1.0 - beta2.powi(t);

    let p = param.as_mut_slice();
    let m = state.first_moment.as_mut_slice();
    let v = state.second_moment.as_mut_slice();
    for (((p, &g), m), v) in p.iter_mut().zip(grad.as_slice()).zip(m).zip(v) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / correction1;
        let v_hat = *v / correction2;
        *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok(())
}

/// Adam over an ordered list of tensors, one state per tensor.
#[derive(Debug, Clone)]
pub struct Adam {
    states: Vec<AdamState>,
}

impl Adam {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a DenseMatrix>, config: AdamConfig) -> Self {
        Self {
            states: params
                .into_iter()
                .map(|p| AdamState::for_param(p, config))
                .collect(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut DenseMatrix>, grads: Vec<&DenseMatrix>) -> Result<()> {
        if params.len() != self.states.len() || grads.len() != self.states.len() {
            return Err(Error::shape(
                "Adam::step",
                format!(
                    "{} params, {} grads, {} states",
                    params.len(),
                    grads.len(),
                    self.states.len()
                ),
            ));
        }
        for ((p, g), s) in params.into_iter().zip(grads).zip(&mut self.states) {
            adam_step(p, g, s)?;
        }
        Ok(())
    }

    pub fn steps_taken(&self) -> u64 {
        self.states.first().map_or(0, AdamState::step_count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_noop() {
        let mut p = DenseMatrix::from_vec(1, 3, vec![0.3, -1.2, 0.0]).unwrap();
        let orig = p.clone();
        let mut s = AdamState::for_param(&p, AdamConfig::default());
        for _ in 0..25 {
            adam_step(&mut p, &DenseMatrix::zeros(1, 3), &mut s).unwrap();
        }
        assert!(p.bit_eq(&orig));
        assert_eq!(s.step_count(), 25);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m_hat = g, v_hat = g^2 on the first step, so the move is lr * g / (|g| + eps).
        let mut p = DenseMatrix::from_vec(1, 1, vec![1.0]).unwrap();
        let mut s = AdamState::for_param(&p, AdamConfig::with_learning_rate(0.001));
        adam_step(&mut p, &DenseMatrix::filled(1, 1, 1.0), &mut s).unwrap();
        let expected = 1.0 - 0.001 * 1.0 / (1.0 + 1e-8);
        assert!((p[(0, 0)] - expected).abs() < 1e-15);
        assert!((p[(0, 0)] - 0.999).abs() < 1e-10);
    }

    #[test]
    fn deterministic_trajectory() {
        let run = || {
            let mut p = DenseMatrix::from_vec(1, 2, vec![0.5, -0.5]).unwrap();
            let mut s = AdamState::for_param(&p, AdamConfig::default());
            for k in 0..50 {
                let g = p.map(|x| 2.0 * x + k as f64 * 1e-3);
                adam_step(&mut p, &g, &mut s).unwrap();
            }
            p
        };
        assert!(run().bit_eq(&run()));
    }

    #[test]
    fn rejects_bad_input() {
        let mut p = DenseMatrix::zeros(2, 2);
        let mut s = AdamState::for_param(&p, AdamConfig::default());
        assert!(matches!(
            adam_step(&mut p, &DenseMatrix::zeros(1, 2), &mut s),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            adam_step(&mut p, &DenseMatrix::filled(2, 2, f64::NAN), &mut s),
            Err(Error::Numeric { .. })
        ));
        assert_eq!(s.step_count(), 0);
    }
}
