use crate::error::{AcasError, Result};
use crate::optimizer::w1::{dw1_dbeta, stable_ranks};

/// Buffered p-values and their Jacobian rows between two weight updates.
///
/// Row `i` holds `∂beta_i/∂w_k` for every lag slot `k`, evaluated with the
/// weights in force when `beta_i` was emitted. Slots with no stored score at
/// that time stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchState {
    betas: Vec<f64>,
    jacobian: Vec<f64>,
    capacity: usize,
    lags: usize,
}

impl BatchState {
    pub fn new(capacity: usize, lags: usize) -> Self {
        assert!(capacity > 0, "batch capacity must be positive");
        Self {
            betas: Vec::with_capacity(capacity),
            jacobian: vec![0.0; capacity * lags],
            capacity,
            lags,
        }
    }

    pub fn count(&self) -> usize {
        self.betas.len()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn lags(&self) -> usize {
        self.lags
    }

    pub fn is_full(&self) -> bool {
        self.betas.len() == self.capacity
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.jacobian[i * self.lags..(i + 1) * self.lags]
    }

    /// Appends `beta` and lets `fill` write its Jacobian row (pre-zeroed).
    ///
    /// # Panics
    /// If the batch is already full.
    pub fn push_with(&mut self, beta: f64, fill: impl FnOnce(&mut [f64])) {
        assert!(!self.is_full(), "batch already holds {} rows", self.capacity);
        let i = self.betas.len();
        let row = &mut self.jacobian[i * self.lags..(i + 1) * self.lags];
        row.fill(0.0);
        fill(row);
        self.betas.push(beta);
    }

    /// Appends a precomputed row; missing trailing lags are zero.
    pub fn push_row(&mut self, beta: f64, row: &[f64]) -> Result<()> {
        if row.len() > self.lags {
            return Err(AcasError::LengthMismatch {
                expected: self.lags,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) || !beta.is_finite() {
            return Err(AcasError::NonFinite("jacobian row"));
        }
        self.push_with(beta, |dst| dst[..row.len()].copy_from_slice(row));
        Ok(())
    }

    pub fn reset(&mut self) {
        self.betas.clear();
    }
}

/// Chain-rule gradient of the batch W1 objective with respect to every lag
/// weight: `g_k = Σ_i ∂W1/∂beta_i · J[i, k]`.
pub fn batch_gradient(batch: &BatchState) -> Result<Vec<f64>> {
    if !batch.is_full() {
        return Err(AcasError::IncompleteBatch {
            count: batch.count(),
            capacity: batch.capacity(),
        });
    }
    let n_b = batch.count();
    let ranks = stable_ranks(batch.betas());
    let mut grad = vec![0.0; batch.lags()];
    for (i, (&beta, &rank)) in batch.betas().iter().zip(&ranks).enumerate() {
        let factor = dw1_dbeta(beta, rank, n_b)?;
        if factor == 0.0 {
            continue;
        }
        for (g, &j) in grad.iter_mut().zip(batch.row(i)) {
            *g += factor * j;
        }
    }
    Ok(grad)
}
