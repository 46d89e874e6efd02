//! Threshold-dependent and threshold-free detection metrics, and calibration
//! diagnostics against known ground-truth p-values.

mod calibration;
mod metrics;

pub use calibration::{calibration_table, ecdf_report, BucketError, EcdfReport};
pub use metrics::{
    auc_pr, auc_pr_with_reference, evaluate_scores, f1, f1_from_predictions, fpr, oracle_select, point_adjust,
    point_adjust_f1, quantile_thresholds, Metric, MetricsReport, ThresholdGrid, ThresholdPoint, ThresholdSelection,
    DEFAULT_PR_QUANTILES,
};

/// Keeps the entries whose `keep` flag is set.
pub fn mask<T: Copy>(values: &[T], keep: &[bool]) -> Vec<T> {
    values.iter().zip(keep).filter(|(_, &k)| k).map(|(&v, _)| v).collect()
}
