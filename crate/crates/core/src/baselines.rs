//! Reference scorers: offline split conformal, an equal-weight rolling
//! window, and a Gaussian fit of the calibration errors.

use crate::conformal::{conformal_pvalue, PValue, ScoreWindow};
use crate::error::{AcasError, Result};
use crate::stats::normal_sf;

/// Nonconformity scores from a designated non-anomalous prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSplit {
    scores: Vec<f64>,
}

impl CalibrationSplit {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(AcasError::EmptyInput("calibration split"));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(AcasError::NonFinite("calibration split"));
        }
        Ok(Self { scores })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Frozen split-conformal scorer: `(1 + #{S_i >= s}) / (m + 1)`.
#[derive(Debug, Clone)]
pub struct SplitConformal {
    sorted: Vec<f64>,
}

impl SplitConformal {
    pub fn new(calib: &CalibrationSplit) -> Self {
        let mut sorted = calib.scores.clone();
        sorted.sort_by(f64::total_cmp);
        Self { sorted }
    }

    pub fn score(&self, test_score: f64) -> Result<PValue> {
        if test_score.is_nan() {
            return Err(AcasError::NonFinite("test score"));
        }
        let below = self.sorted.partition_point(|&s| s < test_score);
        let exceed = self.sorted.len() - below;
        PValue::new((1 + exceed) as f64 / (self.sorted.len() + 1) as f64)
    }
}

/// One-shot form of [`SplitConformal::score`].
pub fn split_conformal_score(calib: &CalibrationSplit, test_score: f64) -> Result<PValue> {
    SplitConformal::new(calib).score(test_score)
}

/// Equal-weight rolling window: score against the window, then append.
#[derive(Debug, Clone)]
pub struct FixedWindow {
    window: ScoreWindow,
    ones: Vec<f64>,
}

impl FixedWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            window: ScoreWindow::new(capacity),
            ones: vec![1.0; capacity],
        }
    }

    pub fn window(&self) -> &ScoreWindow {
        &self.window
    }

    pub fn score(&mut self, test_score: f64) -> Result<PValue> {
        if !test_score.is_finite() {
            return Err(AcasError::NonFinite("fixed-window score"));
        }
        let p = fixed_window_pvalue(&self.window, &self.ones[..self.window.len()], test_score)?;
        self.window.push(test_score)?;
        Ok(p)
    }
}

fn fixed_window_pvalue(window: &ScoreWindow, ones: &[f64], test_score: f64) -> Result<PValue> {
    conformal_pvalue(window, ones, test_score)
}

/// Scores `test_score` against an equal-weight window and appends it.
pub fn fixed_window_score(window: &mut ScoreWindow, test_score: f64) -> Result<PValue> {
    if !test_score.is_finite() {
        return Err(AcasError::NonFinite("fixed-window score"));
    }
    let ones = vec![1.0; window.len()];
    let p = fixed_window_pvalue(window, &ones, test_score)?;
    window.push(test_score)?;
    Ok(p)
}

/// Upper-tail Gaussian model of the calibration errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianModel {
    pub mean: f64,
    /// Unbiased sample standard deviation.
    pub std_dev: f64,
}

impl GaussianModel {
    pub fn fit(calib: &CalibrationSplit) -> Result<Self> {
        let m = calib.len();
        if m < 2 {
            return Err(AcasError::DegenerateFit("gaussian fit needs at least two scores"));
        }
        let mean = calib.scores.iter().sum::<f64>() / m as f64;
        let var = calib.scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        let std_dev = var.sqrt();
        if std_dev <= 0.0 || !std_dev.is_finite() {
            return Err(AcasError::DegenerateFit("zero calibration variance"));
        }
        Ok(Self { mean, std_dev })
    }

    /// `1 - Φ((s - mean) / std_dev)`, floored at the smallest positive double.
    pub fn score(&self, test_score: f64) -> Result<PValue> {
        if test_score.is_nan() {
            return Err(AcasError::NonFinite("test score"));
        }
        Ok(PValue::saturating(normal_sf((test_score - self.mean) / self.std_dev)))
    }
}

pub fn gaussian_score(calib: &CalibrationSplit, test_score: f64) -> Result<PValue> {
    GaussianModel::fit(calib)?.score(test_score)
}
