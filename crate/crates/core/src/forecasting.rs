//! Forecast frames, simple built-in forecasters and alignment of multi-horizon
//! forecasts with the observations they target.
//!
//! A frame issued at index `t` carries `D` values; horizon `d` targets `t + d`.
//! External forecasters (foundation models, anything else) enter through the
//! same [`ForecastFrame`] type, so the engine never knows where they came from.

use serde::{Deserialize, Serialize};

use crate::error::{AcasError, Result};

/// Default context length for built-in forecasters.
pub const DEFAULT_CONTEXT_LEN: usize = 52;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastFrame {
    pub issue_index: usize,
    /// Entry `d - 1` is the horizon-`d` forecast; `None` marks a missing cell.
    pub values: Vec<Option<f64>>,
}

impl ForecastFrame {
    pub fn new(issue_index: usize, values: Vec<Option<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(AcasError::EmptyInput("forecast frame"));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(AcasError::NonFinite("forecast frame"));
        }
        Ok(Self { issue_index, values })
    }

    pub fn complete(issue_index: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(issue_index, values.into_iter().map(Some).collect())
    }

    pub fn horizons(&self) -> usize {
        self.values.len()
    }

    /// Forecast for horizon `d` (1-based).
    pub fn horizon(&self, d: usize) -> Option<f64> {
        d.checked_sub(1).and_then(|i| self.values.get(i).copied().flatten())
    }
}

/// A univariate series with optional anomaly labels and calibration split.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeriesRecord {
    pub values: Vec<f64>,
    pub labels: Option<Vec<bool>>,
    /// End (exclusive) of the non-anomalous prefix.
    pub split_index: Option<usize>,
}

impl SeriesRecord {
    pub fn new(values: Vec<f64>, labels: Option<Vec<bool>>, split_index: Option<usize>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(AcasError::NonFinite("series values"));
        }
        if let Some(l) = &labels {
            if l.len() != values.len() {
                return Err(AcasError::LengthMismatch {
                    expected: values.len(),
                    got: l.len(),
                });
            }
        }
        if let Some(s) = split_index {
            if s > values.len() {
                return Err(AcasError::InvalidConfig(format!(
                    "split_index {s} beyond series length {}",
                    values.len()
                )));
            }
        }
        Ok(Self {
            values,
            labels,
            split_index,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Point forecaster over a context window.
pub trait Forecaster: Send + Sync {
    /// Forecasts horizons `1..=horizons` from `context` (oldest first).
    fn forecast(&self, context: &[f64], horizons: usize) -> Result<Vec<f64>>;

    /// Shortest context the forecaster accepts.
    fn min_context(&self) -> usize {
        1
    }
}

/// Repeats the last observed value.
pub fn naive_forecast(context: &[f64], horizons: usize) -> Result<Vec<f64>> {
    let last = *context.last().ok_or(AcasError::EmptyInput("naive forecast context"))?;
    Ok(vec![last; horizons])
}

/// Repeats the last full season: `Ŷ^d = context[len - period + (d - 1) mod period]`.
pub fn seasonal_naive_forecast(context: &[f64], horizons: usize, period: usize) -> Result<Vec<f64>> {
    if period == 0 {
        return Err(AcasError::InvalidConfig("seasonal period must be positive".into()));
    }
    if context.len() < period {
        return Err(AcasError::InvalidConfig(format!(
            "context of length {} is shorter than period {period}",
            context.len()
        )));
    }
    let base = context.len() - period;
    Ok((0..horizons).map(|d| context[base + d % period]).collect())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Naive;

impl Forecaster for Naive {
    fn forecast(&self, context: &[f64], horizons: usize) -> Result<Vec<f64>> {
        naive_forecast(context, horizons)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SeasonalNaive {
    pub period: usize,
}

impl Forecaster for SeasonalNaive {
    fn forecast(&self, context: &[f64], horizons: usize) -> Result<Vec<f64>> {
        seasonal_naive_forecast(context, horizons, self.period)
    }

    fn min_context(&self) -> usize {
        self.period
    }
}

/// Predicts the same value at every horizon.
#[derive(Debug, Clone, Copy, Default)]
pub struct Constant(pub f64);

impl Forecaster for Constant {
    fn forecast(&self, _context: &[f64], horizons: usize) -> Result<Vec<f64>> {
        Ok(vec![self.0; horizons])
    }
}

/// Issues a frame at every index `t < len - 1` whose trailing context (at most
/// `context_len` values ending at `t`) satisfies the forecaster.
pub fn rolling_frames(
    values: &[f64],
    forecaster: &dyn Forecaster,
    horizons: usize,
    context_len: usize,
) -> Result<Vec<ForecastFrame>> {
    if context_len == 0 {
        return Err(AcasError::InvalidConfig("context length must be positive".into()));
    }
    let mut frames = Vec::new();
    for t in 0..values.len().saturating_sub(1) {
        let start = (t + 1).saturating_sub(context_len);
        let context = &values[start..=t];
        if context.len() < forecaster.min_context() {
            continue;
        }
        frames.push(ForecastFrame::complete(t, forecaster.forecast(context, horizons)?)?);
    }
    Ok(frames)
}

/// Per-index horizon errors produced by [`align_errors`].
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// `errors[t][d - 1] = |Y_t - Ŷ^d_t|` where a forecast targeted `t`.
    pub errors: Vec<Vec<Option<f64>>>,
    /// Forecast cells targeting indices past the end of the series.
    pub orphan_count: usize,
    /// Smallest such out-of-range target index.
    pub first_orphan: Option<usize>,
}

/// Joins frames with the observations they target.
///
/// Frames must be sorted by strictly increasing `issue_index` and share one
/// horizon count.
pub fn align_errors(values: &[f64], frames: &[ForecastFrame]) -> Result<Alignment> {
    let horizons = frames.first().map_or(0, ForecastFrame::horizons);
    let mut errors = vec![vec![None; horizons]; values.len()];
    let mut orphan_count = 0;
    let mut first_orphan: Option<usize> = None;
    let mut previous: Option<usize> = None;
    for frame in frames {
        if previous.is_some_and(|p| frame.issue_index <= p) {
            return Err(AcasError::InvalidConfig(format!(
                "forecast frames must have strictly increasing issue indices (saw {} after {})",
                frame.issue_index,
                previous.unwrap_or_default()
            )));
        }
        previous = Some(frame.issue_index);
        if frame.horizons() != horizons {
            return Err(AcasError::LengthMismatch {
                expected: horizons,
                got: frame.horizons(),
            });
        }
        for (d0, value) in frame.values.iter().enumerate() {
            let Some(forecast) = value else { continue };
            let target = frame.issue_index + d0 + 1;
            match values.get(target) {
                Some(y) => errors[target][d0] = Some((y - forecast).abs()),
                None => {
                    orphan_count += 1;
                    first_orphan = Some(first_orphan.map_or(target, |f| f.min(target)));
                }
            }
        }
    }
    Ok(Alignment {
        errors,
        orphan_count,
        first_orphan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    #[test]
    fn naive_examples() {
        assert_eq!(naive_forecast(&[1.0, 4.0, 7.0], 3).unwrap(), vec![7.0; 3]);
        assert_eq!(naive_forecast(&[2.0], 1).unwrap(), vec![2.0]);
        assert!(naive_forecast(&[], 2).is_err());
    }

    #[test]
    fn seasonal_examples() {
        assert_eq!(seasonal_naive_forecast(&[1.0, 2.0], 4, 2).unwrap(), vec![1.0, 2.0, 1.0, 2.0]);
        let ctx = [3.0, 1.0, 4.0, 1.5];
        assert_eq!(seasonal_naive_forecast(&ctx, 5, 1).unwrap(), naive_forecast(&ctx, 5).unwrap());
        assert!(seasonal_naive_forecast(&[1.0], 2, 3).is_err());
    }

    #[test]
    fn seasonal_forecast_is_exact_on_periodic_signals() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let p = rng.random_range(1..8);
            let season: Vec<f64> = (0..p).map(|_| rng.random_range(-5.0..5.0)).collect();
            let series: Vec<f64> = (0..120).map(|t| season[t % p]).collect();
            let frames = rolling_frames(&series, &SeasonalNaive { period: p }, 6, 52).unwrap();
            let aligned = align_errors(&series, &frames).unwrap();
            assert!(aligned.errors.iter().flatten().flatten().all(|&e| e == 0.0));
        }
    }

    #[test]
    fn single_frame_hits_exactly_its_targets() {
        let series = vec![0.0; 10];
        let frame = ForecastFrame::complete(4, vec![1.0, 2.0, 3.0]).unwrap();
        let a = align_errors(&series, &[frame]).unwrap();
        for (t, row) in a.errors.iter().enumerate() {
            let n = row.iter().flatten().count();
            assert_eq!(n, usize::from((5..=7).contains(&t)), "t={t}");
        }
        assert_eq!(a.errors[6][1], Some(2.0));
    }

    #[test]
    fn orphan_targets_are_counted() {
        let series = vec![1.0; 5];
        let frames = vec![
            ForecastFrame::complete(2, vec![1.0, 1.0, 1.0]).unwrap(),
            ForecastFrame::new(3, vec![Some(1.0), None, Some(1.0)]).unwrap(),
        ];
        let a = align_errors(&series, &frames).unwrap();
        // issue 2 -> 5 orphan; issue 3 -> 5 missing, 6 orphan
        assert_eq!(a.orphan_count, 2);
        assert_eq!(a.first_orphan, Some(5));
        // target 4: issue 3 at h1 and issue 2 at h2
        assert_eq!(a.errors[4], vec![Some(0.0), Some(0.0), None]);
    }

    #[test]
    fn unsorted_frames_error() {
        let f = |i| ForecastFrame::complete(i, vec![0.0]).unwrap();
        assert!(align_errors(&[0.0; 4], &[f(1), f(1)]).is_err());
        assert!(align_errors(&[0.0; 4], &[f(2), f(1)]).is_err());
    }

    #[test]
    fn alignment_matches_dictionary_join() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let len = rng.random_range(1..60);
            let horizons = rng.random_range(1..6);
            let series: Vec<f64> = (0..len).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mut frames = Vec::new();
            for t in 0..len + 3 {
                if rng.random_bool(0.6) {
                    let vals = (0..horizons)
                        .map(|_| rng.random_bool(0.8).then(|| rng.random_range(-3.0..3.0)))
                        .collect();
                    frames.push(ForecastFrame::new(t, vals).unwrap());
                }
            }
            let mut join: HashMap<(usize, usize), f64> = HashMap::new();
            for f in &frames {
                for d in 1..=horizons {
                    if let Some(v) = f.horizon(d) {
                        join.insert((f.issue_index + d, d), v);
                    }
                }
            }
            let a = align_errors(&series, &frames).unwrap();
            let mut orphans = 0;
            for (&(target, d), &v) in &join {
                if target < len {
                    assert_eq!(a.errors[target][d - 1], Some((series[target] - v).abs()));
                } else {
                    orphans += 1;
                }
            }
            assert_eq!(a.orphan_count, orphans);
            let emitted = a.errors.iter().flatten().flatten().count();
            assert_eq!(emitted, join.keys().filter(|(t, _)| *t < len).count());
        }
    }

    #[test]
    fn rolling_frames_respect_min_context() {
        let series: Vec<f64> = (0..10).map(f64::from).collect();
        let frames = rolling_frames(&series, &SeasonalNaive { period: 3 }, 2, 52).unwrap();
        assert_eq!(frames.first().unwrap().issue_index, 2);
        assert_eq!(frames.last().unwrap().issue_index, 8);
        let naive = rolling_frames(&series, &Naive, 1, 4).unwrap();
        assert_eq!(naive.len(), 9);
        assert_eq!(naive[5].values, vec![Some(5.0)]);
    }

    #[test]
    fn series_record_validation() {
        assert!(SeriesRecord::new(vec![1.0, 2.0], Some(vec![true]), None).is_err());
        assert!(SeriesRecord::new(vec![1.0], None, Some(2)).is_err());
        assert!(SeriesRecord::new(vec![f64::NAN], None, None).is_err());
        assert!(SeriesRecord::new(vec![1.0, 2.0], Some(vec![false, true]), Some(1)).is_ok());
    }
}
