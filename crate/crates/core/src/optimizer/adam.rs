use serde::{Deserialize, Serialize};

use crate::conformal::WeightVector;
use crate::error::{AcasError, Result};
use crate::optimizer::projection::project_weights;

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
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

/// Moment accumulators for the weight updates.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    config: AdamConfig,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl OptimizerState {
    pub fn new(dim: usize, config: AdamConfig) -> Self {
        Self {
            config,
            first_moment: vec![0.0; dim],
            second_moment: vec![0.0; dim],
            step_count: 0,
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }
}

/// One bias-corrected Adam step followed by projection back onto the
/// feasible weight set. On error neither the weights nor the moments change.
pub fn adam_step(weights: &WeightVector, gradient: &[f64], state: &mut OptimizerState) -> Result<WeightVector> {
    let dim = weights.len();
    if gradient.len() != dim {
        return Err(AcasError::LengthMismatch {
            expected: dim,
            got: gradient.len(),
        });
    }
    if state.first_moment.len() != dim {
        return Err(AcasError::LengthMismatch {
            expected: dim,
            got: state.first_moment.len(),
        });
    }
    if gradient.iter().any(|g| !g.is_finite()) {
        return Err(AcasError::NonFinite("gradient"));
    }

    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = state.step_count + 1;
    let bias1 = 1.0 - beta1.powf(t as f64);
    let bias2 = 1.0 - beta2.powf(t as f64);

    let mut m = state.first_moment.clone();
    let mut v = state.second_moment.clone();
    let mut raw = Vec::with_capacity(dim);
    for k in 0..dim {
        let g = gradient[k];
        m[k] = beta1 * m[k] + (1.0 - beta1) * g;
        v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
        let m_hat = m[k] / bias1;
        let v_hat = v[k] / bias2;
        raw.push(weights[k] - learning_rate * m_hat / (v_hat.sqrt() + epsilon));
    }
    let projected = project_weights(&raw, weights.floor())?;

    state.first_moment = m;
    state.second_moment = v;
    state.step_count = t;
    Ok(projected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_gradient_keeps_feasible_weights() {
        let w = WeightVector::new(vec![0.3, 1.0, 0.7], 1.0).unwrap();
        let mut state = OptimizerState::new(3, AdamConfig::default());
        let next = adam_step(&w, &[0.0; 3], &mut state).unwrap();
        assert_eq!(next, w);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let w = WeightVector::new(vec![0.5], 0.0).unwrap();
        let mut state = OptimizerState::new(1, AdamConfig::default());
        let next = adam_step(&w, &[1.0], &mut state).unwrap();
        assert!((next[0] - (0.5 - 1e-3)).abs() < 1e-10);

        // a step that would leave the box is clipped back
        let edge = WeightVector::new(vec![1.0], 1.0).unwrap();
        let mut state = OptimizerState::new(1, AdamConfig::default());
        let next = adam_step(&edge, &[1.0], &mut state).unwrap();
        assert_eq!(next.as_slice(), &[1.0]);
    }

    #[test]
    fn non_finite_gradient_aborts_without_side_effects() {
        let w = WeightVector::ones(2, 1.0).unwrap();
        let mut state = OptimizerState::new(2, AdamConfig::default());
        assert_eq!(
            adam_step(&w, &[f64::NAN, 0.0], &mut state),
            Err(AcasError::NonFinite("gradient"))
        );
        assert_eq!(state.step_count(), 0);
        assert!(state.first_moment().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn updates_stay_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let n = rng.random_range(1..20);
            let floor = rng.random_range(0..=n) as f64;
            let mut w = WeightVector::ones(n, floor).unwrap();
            let config = AdamConfig {
                learning_rate: rng.random_range(0.001..0.5),
                ..AdamConfig::default()
            };
            let mut state = OptimizerState::new(n, config);
            for _ in 0..20 {
                let g: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
                w = adam_step(&w, &g, &mut state).unwrap();
                assert!(w.iter().all(|x| (0.0..=1.0).contains(x)));
                assert!(w.sum() >= floor);
            }
        }
    }
}
