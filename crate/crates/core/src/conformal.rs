//! Weighted conformal quantiles and the conformal p-value transform.
//!
//! Past nonconformity scores are kept in a [`ScoreWindow`] and paired with a
//! lag-indexed weight vector: weight slot 0 belongs to the most recent past
//! score, slot 1 to the one before it, and so on. Every routine here takes the
//! weights as a plain slice in that lag order, so callers can pass either a
//! full [`WeightVector`] or the active prefix of one.
//!
//! The discrete calibration distribution places mass `w_i / (|w| + 1)` on each
//! past score and `1 / (|w| + 1)` at `+infinity`. The p-value of a test score
//! is the weighted fraction of past scores at least as large as it, with the
//! point mass counted as an exceedance:
//!
//! ```text
//! beta = (1 + sum_i w_i * 1[S_i >= s]) / (|w| + 1)
//! ```

use std::collections::VecDeque;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{AcasError, Result};

/// Ring buffer of the most recent past nonconformity scores (newest last).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreWindow {
    scores: VecDeque<f64>,
    capacity: usize,
}

impl ScoreWindow {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "score window capacity must be positive");
        Self {
            scores: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    /// Builds a window from scores given oldest first. Only the newest
    /// `capacity` values are kept.
    pub fn from_scores<I: IntoIterator<Item = f64>>(capacity: usize, scores: I) -> Result<Self> {
        let mut window = Self::new(capacity);
        for s in scores {
            window.push(s)?;
        }
        Ok(window)
    }

    /// Appends a score, returning the evicted oldest score when full.
    pub fn push(&mut self, score: f64) -> Result<Option<f64>> {
        if !score.is_finite() {
            return Err(AcasError::NonFinite("score window"));
        }
        let evicted = if self.scores.len() == self.capacity {
            self.scores.pop_front()
        } else {
            None
        };
        self.scores.push_back(score);
        Ok(evicted)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Score stored `lag` steps in the past (`lag = 1` is the newest).
    pub fn lag(&self, lag: usize) -> Option<f64> {
        if lag == 0 || lag > self.scores.len() {
            return None;
        }
        self.scores.get(self.scores.len() - lag).copied()
    }

    /// Scores in lag order, newest first.
    pub fn iter_lagged(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.scores.iter().rev().copied()
    }

    /// Scores in arrival order, oldest first.
    pub fn iter(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.scores.iter().copied()
    }

    pub fn clear(&mut self) {
        self.scores.clear();
    }
}

/// Number of critical samples `n_c = ceil(1 / alpha_c) - 1`.
///
/// A small slack absorbs representation error so that e.g. `alpha_c = 0.01`
/// yields 99 rather than 100.
pub fn critical_samples(alpha_c: f64) -> Result<usize> {
    if !(alpha_c > 0.0 && alpha_c < 1.0) {
        return Err(AcasError::InvalidAlpha(alpha_c));
    }
    Ok(((1.0 / alpha_c) - 1e-9).ceil() as usize - 1)
}

/// Lag-indexed calibration weights in `[0, 1]` whose sum never drops below
/// the effective-sample-size floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    weights: Vec<f64>,
    floor: f64,
}

impl WeightVector {
    /// Validates box membership and the floor constraint.
    pub fn new(weights: Vec<f64>, floor: f64) -> Result<Self> {
        if floor > weights.len() as f64 {
            return Err(AcasError::Infeasible {
                floor,
                dim: weights.len(),
            });
        }
        for &w in &weights {
            if !w.is_finite() {
                return Err(AcasError::NonFinite("weights"));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(AcasError::OutOfUnitInterval {
                    what: "weights",
                    value: w,
                });
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum < floor {
            return Err(AcasError::Infeasible {
                floor,
                dim: weights.len(),
            });
        }
        Ok(Self { weights, floor })
    }

    /// Ones on the `floor` most recent lags, zeros elsewhere.
    pub fn critical(len: usize, floor: usize) -> Result<Self> {
        let weights = (1..=len).map(|i| if i <= floor { 1.0 } else { 0.0 }).collect();
        Self::new(weights, floor as f64)
    }

    pub fn ones(len: usize, floor: f64) -> Result<Self> {
        Self::new(vec![1.0; len], floor)
    }

    /// Caller guarantees the invariants (used by the projection).
    pub(crate) fn from_projected(weights: Vec<f64>, floor: f64) -> Self {
        debug_assert!(weights.iter().all(|w| (0.0..=1.0).contains(w)));
        Self { weights, floor }
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// The weights of the `len` most recent lags.
    pub fn active(&self, len: usize) -> &[f64] {
        &self.weights[..len.min(self.weights.len())]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.weights
    }
}

impl Deref for WeightVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.weights
    }
}

/// A conformal p-value in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PValue(f64);

impl PValue {
    pub const ONE: PValue = PValue(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() {
            return Err(AcasError::NonFinite("p-value"));
        }
        if !(value > 0.0 && value <= 1.0) {
            return Err(AcasError::OutOfUnitInterval {
                what: "p-value",
                value,
            });
        }
        Ok(Self(value))
    }

    /// Clamps into `[f64::MIN_POSITIVE, 1]`; for tail probabilities that may
    /// underflow to zero.
    pub fn saturating(value: f64) -> Self {
        Self(value.clamp(f64::MIN_POSITIVE, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<PValue> for f64 {
    fn from(p: PValue) -> f64 {
        p.0
    }
}

/// Result of a weighted conformal quantile query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantileResult {
    Finite(f64),
    /// The requested level lands on the point mass at infinity.
    Infinity,
}

impl QuantileResult {
    /// `true` when `score` is strictly above the quantile.
    pub fn is_exceeded_by(self, score: f64) -> bool {
        match self {
            QuantileResult::Finite(q) => score > q,
            QuantileResult::Infinity => false,
        }
    }
}

fn check_lengths(window: &ScoreWindow, weights: &[f64]) -> Result<()> {
    if window.len() != weights.len() {
        return Err(AcasError::LengthMismatch {
            expected: window.len(),
            got: weights.len(),
        });
    }
    Ok(())
}

/// `(1 - alpha)`-quantile of the weighted calibration distribution with a
/// point mass at infinity: the smallest stored score whose cumulative mass
/// reaches `1 - alpha`.
pub fn weighted_quantile(window: &ScoreWindow, weights: &[f64], alpha: f64) -> Result<QuantileResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AcasError::InvalidAlpha(alpha));
    }
    check_lengths(window, weights)?;
    if window.is_empty() {
        return Err(AcasError::EmptyWindow);
    }
    let mut support: Vec<(f64, f64)> = window.iter_lagged().zip(weights.iter().copied()).collect();
    support.sort_by(|a, b| a.0.total_cmp(&b.0));

    let total = weights.iter().sum::<f64>() + 1.0;
    let level = 1.0 - alpha;
    let mut cumulative = 0.0;
    for (score, w) in support {
        cumulative += w;
        if cumulative / total >= level {
            return Ok(QuantileResult::Finite(score));
        }
    }
    Ok(QuantileResult::Infinity)
}

/// Weighted conformal p-value of `test_score`. Ties with stored scores count
/// as exceedances. An empty window yields 1.
pub fn conformal_pvalue(window: &ScoreWindow, weights: &[f64], test_score: f64) -> Result<PValue> {
    if test_score.is_nan() {
        return Err(AcasError::NonFinite("test score"));
    }
    check_lengths(window, weights)?;
    let mut total = 0.0;
    let mut exceed = 0.0;
    for (s, &w) in window.iter_lagged().zip(weights) {
        total += w;
        if s >= test_score {
            exceed += w;
        }
    }
    Ok(PValue(((1.0 + exceed) / (total + 1.0)).min(1.0)))
}

/// Flags an anomaly at level `alpha` when `pvalue < alpha`.
pub fn detect(pvalue: PValue, alpha: f64) -> bool {
    pvalue.value() < alpha
}
