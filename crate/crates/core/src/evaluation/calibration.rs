use serde::{Deserialize, Serialize};

use crate::error::{AcasError, Result};
use crate::optimizer::empirical_w1;

/// Mean absolute error of emitted p-values within one truth bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketError {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// `None` for an empty bucket.
    pub mean_abs_error: Option<f64>,
}

/// Groups pairs by `truth` into `buckets` equal-width bins of `[0, 1]` (the
/// last bin closed) and averages `|score - truth|` per bin.
pub fn calibration_table(scores: &[f64], truths: &[f64], buckets: usize) -> Result<Vec<BucketError>> {
    if scores.len() != truths.len() {
        return Err(AcasError::LengthMismatch {
            expected: scores.len(),
            got: truths.len(),
        });
    }
    if buckets == 0 {
        return Err(AcasError::InvalidConfig("need at least one bucket".into()));
    }
    let mut sums = vec![0.0; buckets];
    let mut counts = vec![0usize; buckets];
    for (&s, &t) in scores.iter().zip(truths) {
        if !(0.0..=1.0).contains(&t) {
            return Err(AcasError::OutOfUnitInterval {
                what: "calibration truths",
                value: t,
            });
        }
        let b = ((t * buckets as f64) as usize).min(buckets - 1);
        sums[b] += (s - t).abs();
        counts[b] += 1;
    }
    Ok((0..buckets)
        .map(|b| BucketError {
            lower: b as f64 / buckets as f64,
            upper: (b + 1) as f64 / buckets as f64,
            count: counts[b],
            mean_abs_error: (counts[b] > 0).then(|| sums[b] / counts[b] as f64),
        })
        .collect())
}

/// Empirical CDF samples of the scores and their W1 distance to uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfReport {
    pub grid: Vec<f64>,
    pub cdf: Vec<f64>,
    pub w1: f64,
}

/// `F(alpha) = #{beta <= alpha} / N` on `grid_points` evenly spaced levels in
/// `[0, 1]`.
pub fn ecdf_report(scores: &[f64], grid_points: usize) -> Result<EcdfReport> {
    if scores.is_empty() {
        return Err(AcasError::EmptyInput("ecdf_report"));
    }
    if grid_points < 2 {
        return Err(AcasError::InvalidConfig("ecdf grid needs at least two points".into()));
    }
    let w1 = empirical_w1(scores)?;
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let grid: Vec<f64> = (0..grid_points).map(|j| j as f64 / (grid_points - 1) as f64).collect();
    let cdf = grid
        .iter()
        .map(|&a| sorted.partition_point(|&s| s <= a) as f64 / n)
        .collect();
    Ok(EcdfReport { grid, cdf, w1 })
}
