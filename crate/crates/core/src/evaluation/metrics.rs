use serde::{Deserialize, Serialize};

use crate::error::{AcasError, Result};

/// Default number of score quantiles used as PR-curve thresholds.
pub const DEFAULT_PR_QUANTILES: usize = 250;

/// Ascending detection thresholds on the p-value scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    thresholds: Vec<f64>,
}

/// `n` evenly spaced points from `start` to `stop`, both included.
fn linspace(start: f64, stop: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (stop - start) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { stop } else { start + i as f64 * step })
}

impl ThresholdGrid {
    /// 21 points in each of `[0.001, 0.01]`, `[0.02, 0.1]` and `[0.2, 1]`.
    pub fn standard() -> Self {
        let thresholds = linspace(0.001, 0.01, 21)
            .chain(linspace(0.02, 0.1, 21))
            .chain(linspace(0.2, 1.0, 21))
            .collect();
        Self { thresholds }
    }

    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(AcasError::EmptyInput("threshold grid"));
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1] || w[1].is_nan()) {
            return Err(AcasError::InvalidConfig("thresholds must be strictly ascending".into()));
        }
        if let Some(&bad) = thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(AcasError::OutOfUnitInterval {
                what: "threshold grid",
                value: bad,
            });
        }
        Ok(Self { thresholds })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        Self::standard()
    }
}

fn check_lengths(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(AcasError::LengthMismatch {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    Ok(())
}

/// Fraction of normal points with `beta <= alpha`.
pub fn fpr(scores: &[f64], labels: &[bool], alpha: f64) -> Result<f64> {
    check_lengths(scores, labels)?;
    let (mut normals, mut flagged) = (0usize, 0usize);
    for (&s, &anomalous) in scores.iter().zip(labels) {
        if !anomalous {
            normals += 1;
            if s <= alpha {
                flagged += 1;
            }
        }
    }
    if normals == 0 {
        return Err(AcasError::NoNormalPoints);
    }
    Ok(flagged as f64 / normals as f64)
}

/// Point-wise F1; zero when there are no true positives.
pub fn f1_from_predictions(predicted: &[bool], labels: &[bool]) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &l) in predicted.iter().zip(labels) {
        match (p, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}

/// Marks every point of a labelled anomaly segment as detected when any point
/// inside the segment is.
pub fn point_adjust(predicted: &[bool], labels: &[bool]) -> Vec<bool> {
    let mut adjusted = predicted.to_vec();
    let mut start = 0;
    while start < labels.len() {
        if !labels[start] {
            start += 1;
            continue;
        }
        let end = labels[start..].iter().position(|l| !l).map_or(labels.len(), |p| start + p);
        if predicted[start..end].iter().any(|&p| p) {
            adjusted[start..end].fill(true);
        }
        start = end;
    }
    adjusted
}

fn detections(scores: &[f64], alpha: f64) -> Vec<bool> {
    scores.iter().map(|&s| s <= alpha).collect()
}

/// Unadjusted F1 of the rule `beta <= alpha`.
pub fn f1(scores: &[f64], labels: &[bool], alpha: f64) -> Result<f64> {
    check_lengths(scores, labels)?;
    Ok(f1_from_predictions(&detections(scores, alpha), labels))
}

/// Point-adjusted F1 of the rule `beta <= alpha`.
pub fn point_adjust_f1(scores: &[f64], labels: &[bool], alpha: f64) -> Result<f64> {
    check_lengths(scores, labels)?;
    let adjusted = point_adjust(&detections(scores, alpha), labels);
    Ok(f1_from_predictions(&adjusted, labels))
}

/// Threshold-dependent metric maximised by [`oracle_select`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    #[default]
    PaF1,
    F1,
}

impl Metric {
    pub fn evaluate(self, scores: &[f64], labels: &[bool], alpha: f64) -> Result<f64> {
        match self {
            Metric::PaF1 => point_adjust_f1(scores, labels, alpha),
            Metric::F1 => f1(scores, labels, alpha),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = AcasError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pa-f1" => Ok(Metric::PaF1),
            "f1" => Ok(Metric::F1),
            other => Err(AcasError::InvalidConfig(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub metric: f64,
}

/// Best threshold on a grid and the rates reported alongside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSelection {
    pub metric: Metric,
    pub best_threshold: f64,
    pub metric_value: f64,
    pub fpr: f64,
    /// `|fpr - best_threshold|`.
    pub cal_err: f64,
    pub curve: Vec<ThresholdPoint>,
}

/// Evaluates `metric` at every grid threshold and keeps the maximiser; ties
/// go to the smallest threshold.
pub fn oracle_select(scores: &[f64], labels: &[bool], grid: &ThresholdGrid, metric: Metric) -> Result<ThresholdSelection> {
    check_lengths(scores, labels)?;
    let mut curve: Vec<ThresholdPoint> = Vec::with_capacity(grid.len());
    let mut best: Option<usize> = None;
    for &threshold in grid.as_slice() {
        let value = metric.evaluate(scores, labels, threshold)?;
        let rate = fpr(scores, labels, threshold)?;
        if best.is_none_or(|b: usize| value > curve[b].metric) {
            best = Some(curve.len());
        }
        curve.push(ThresholdPoint {
            threshold,
            fpr: rate,
            metric: value,
        });
    }
    let chosen = &curve[best.expect("grid is non-empty")];
    Ok(ThresholdSelection {
        metric,
        best_threshold: chosen.threshold,
        metric_value: chosen.metric,
        fpr: chosen.fpr,
        cal_err: (chosen.fpr - chosen.threshold).abs(),
        curve,
    })
}

/// Type-1 empirical quantiles of `reference` at `n` evenly spaced levels in
/// `[0, 1]`, deduplicated and ascending.
pub fn quantile_thresholds(reference: &[f64], n: usize) -> Result<Vec<f64>> {
    if reference.is_empty() {
        return Err(AcasError::EmptyInput("quantile thresholds"));
    }
    if n == 0 {
        return Err(AcasError::InvalidConfig("need at least one quantile".into()));
    }
    let mut sorted = reference.to_vec();
    sorted.sort_by(f64::total_cmp);
    let len = sorted.len();
    let mut out: Vec<f64> = (0..n)
        .map(|j| {
            let level = if n == 1 { 1.0 } else { j as f64 / (n - 1) as f64 };
            let rank = (level * len as f64).ceil() as usize;
            sorted[rank.clamp(1, len) - 1]
        })
        .collect();
    out.dedup();
    Ok(out)
}

/// Area under the precision-recall curve with thresholds at quantiles of
/// `reference`, detection rule `beta <= threshold`.
///
/// Points come in ascending threshold order (non-decreasing recall); the
/// curve is anchored at recall 0 with the precision of the strictest
/// threshold that detects anything, and integrated with the trapezoid rule.
pub fn auc_pr_with_reference(scores: &[f64], labels: &[bool], reference: &[f64], n_quantiles: usize) -> Result<f64> {
    check_lengths(scores, labels)?;
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(AcasError::SingleClass);
    }
    let thresholds = quantile_thresholds(reference, n_quantiles)?;

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(thresholds.len() + 1);
    let (mut tp, mut fp, mut cursor) = (0usize, 0usize, 0usize);
    for &tau in &thresholds {
        while cursor < order.len() && scores[order[cursor]] <= tau {
            if labels[order[cursor]] {
                tp += 1;
            } else {
                fp += 1;
            }
            cursor += 1;
        }
        if tp + fp == 0 {
            continue;
        }
        points.push((tp as f64 / positives as f64, tp as f64 / (tp + fp) as f64));
    }
    let Some(&(_, first_precision)) = points.first() else {
        return Ok(0.0);
    };
    points.insert(0, (0.0, first_precision));
    Ok(points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1))
        .sum())
}

/// [`auc_pr_with_reference`] using the scored sequence as its own reference.
pub fn auc_pr(scores: &[f64], labels: &[bool], n_quantiles: usize) -> Result<f64> {
    auc_pr_with_reference(scores, labels, scores, n_quantiles)
}

/// Everything reported for one scored series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub metric: Metric,
    pub best_threshold: f64,
    pub metric_value: f64,
    pub fpr: f64,
    pub cal_err: f64,
    /// `None` when only one class is present.
    pub auc_pr: Option<f64>,
    pub per_threshold_fpr: Vec<f64>,
    pub points: usize,
}

/// Oracle threshold selection plus AUC-PR. `reference` supplies the PR
/// quantiles; the scores themselves are used when it is `None` or empty.
pub fn evaluate_scores(
    scores: &[f64],
    labels: &[bool],
    grid: &ThresholdGrid,
    metric: Metric,
    reference: Option<&[f64]>,
) -> Result<(MetricsReport, ThresholdSelection)> {
    let selection = oracle_select(scores, labels, grid, metric)?;
    let reference = reference.filter(|r| !r.is_empty()).unwrap_or(scores);
    let auc = match auc_pr_with_reference(scores, labels, reference, DEFAULT_PR_QUANTILES) {
        Ok(v) => Some(v),
        Err(AcasError::SingleClass) => None,
        Err(e) => return Err(e),
    };
    let report = MetricsReport {
        metric,
        best_threshold: selection.best_threshold,
        metric_value: selection.metric_value,
        fpr: selection.fpr,
        cal_err: selection.cal_err,
        auc_pr: auc,
        per_threshold_fpr: selection.curve.iter().map(|p| p.fpr).collect(),
        points: scores.len(),
    };
    Ok((report, selection))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standard_grid_layout() {
        let g = ThresholdGrid::standard();
        assert_eq!(g.len(), 63);
        let t = g.as_slice();
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert_eq!((t[0], t[20], t[21], t[41], t[42], t[62]), (0.001, 0.01, 0.02, 0.1, 0.2, 1.0));
        assert!((t[1] - 0.00145).abs() < 1e-15);
        assert!((t[43] - 0.24).abs() < 1e-15);
    }

    #[test]
    fn fpr_examples() {
        assert_eq!(fpr(&[1.0; 5], &[false; 5], 0.5).unwrap(), 0.0);
        let grid: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        assert!((fpr(&grid, &[false; 10], 0.3).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(fpr(&[0.1], &[true], 0.5), Err(AcasError::NoNormalPoints));
    }

    #[test]
    fn pa_f1_examples() {
        let labels = [false, false, true, true, true, true, true, false];
        let scores = [1.0, 1.0, 1.0, 1.0, 0.001, 1.0, 1.0, 1.0];
        assert_eq!(point_adjust_f1(&scores, &labels, 0.01).unwrap(), 1.0);
        assert_eq!(point_adjust_f1(&[1.0; 8], &labels, 0.01).unwrap(), 0.0);
        // no anomalies at all
        assert_eq!(point_adjust_f1(&[0.001, 1.0], &[false, false], 0.01).unwrap(), 0.0);
    }

    #[test]
    fn oracle_select_examples() {
        let g = ThresholdGrid::standard();
        // only the top threshold flags anything: precision 1/3, recall 1
        let r = oracle_select(&[1.0, 1.0, 1.0], &[false, true, false], &g, Metric::PaF1).unwrap();
        assert_eq!(r.best_threshold, 1.0);
        assert!((r.metric_value - 0.5).abs() < 1e-15);
        // metric identically zero: ties go to the smallest threshold
        let r = oracle_select(&[1.0, 1.0], &[false, false], &g, Metric::PaF1).unwrap();
        assert_eq!(r.best_threshold, 0.001);
        assert_eq!(r.metric_value, 0.0);

        let scores = [1.0, 0.001, 1.0, 1.0];
        let labels = [false, true, false, false];
        let r = oracle_select(&scores, &labels, &g, Metric::PaF1).unwrap();
        assert_eq!(r.best_threshold, 0.001);
        assert_eq!(r.metric_value, 1.0);
        assert_eq!(r.fpr, 0.0);
        assert!((r.cal_err - 0.001).abs() < 1e-15);
    }

    #[test]
    fn auc_pr_perfect_separation() {
        let scores = [1.0, 0.001, 1.0, 0.001, 1.0];
        let labels = [false, true, false, true, false];
        assert_eq!(auc_pr(&scores, &labels, 250).unwrap(), 1.0);
        assert_eq!(auc_pr(&[0.5, 0.2], &[true, true], 250), Err(AcasError::SingleClass));
    }

    #[test]
    fn quantile_thresholds_cover_small_samples() {
        let v: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert_eq!(quantile_thresholds(&v, 250).unwrap(), v);
        assert_eq!(quantile_thresholds(&[3.0, 1.0, 2.0], 2).unwrap(), vec![1.0, 3.0]);
    }

    proptest! {
        #[test]
        fn fpr_monotone_and_pa_dominates(
            pairs in proptest::collection::vec((0.0f64..=1.0, any::<bool>()), 2..60),
            a in 0.0f64..=1.0,
            b in 0.0f64..=1.0,
        ) {
            let scores: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let mut labels: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            labels[0] = false;
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(fpr(&scores, &labels, lo).unwrap() <= fpr(&scores, &labels, hi).unwrap());
            prop_assert!(point_adjust_f1(&scores, &labels, lo).unwrap() >= f1(&scores, &labels, lo).unwrap());
        }

        #[test]
        fn auc_pr_invariant_under_monotone_transform(
            pairs in proptest::collection::vec((0.0f64..=1.0, any::<bool>()), 2..80),
        ) {
            let scores: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let mut labels: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            labels[0] = true;
            labels[1] = false;
            let transformed: Vec<f64> = scores.iter().map(|s| s.powi(3) * 0.5 + 0.1).collect();
            let a = auc_pr(&scores, &labels, 250).unwrap();
            let b = auc_pr(&transformed, &labels, 250).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
