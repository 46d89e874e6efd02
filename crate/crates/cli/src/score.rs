//! `acas score`: forecast, align, and stream every horizon of every feature
//! through its scorer.

use std::io::Write;
use std::path::Path;

use acas_core::forecasting::{align_errors, rolling_frames, Alignment, Constant, Forecaster, Naive, SeasonalNaive};
use acas_core::io::{parse_forecasts, parse_series, SeriesTable};
use acas_core::{detect, median_aggregate, PValue};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use crate::config::{Mode, ForecasterSpec, RunConfig};
use crate::methods::{HorizonScorer, Scored};
use crate::scorefile::{write_columns, write_row, ScoreRow};

/// Rows are scored and flushed in blocks of this many timestamps.
const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSummary {
    pub rows: usize,
    pub features: usize,
    pub horizons: usize,
    pub detections: usize,
    pub orphans: usize,
}

pub fn read_series(path: &Path) -> Result<SeriesTable> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_series(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Per-timestamp absolute errors for one feature, `horizons` wide.
pub fn feature_errors(cfg: &RunConfig, values: &[f64], features: usize) -> Result<Alignment> {
    let frames = match &cfg.forecaster {
        ForecasterSpec::External(path) => {
            if features != 1 {
                bail!("external forecasts are only supported for univariate series ({features} features found)");
            }
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let frames = parse_forecasts(&text).with_context(|| format!("parsing {}", path.display()))?;
            if let Some(f) = frames.first() {
                if f.horizons() != cfg.horizons {
                    bail!(
                        "{} has {} horizon columns but horizons is set to {}",
                        path.display(),
                        f.horizons(),
                        cfg.horizons
                    );
                }
            }
            frames
        }
        spec => {
            let forecaster: Box<dyn Forecaster> = match spec {
                ForecasterSpec::Naive => Box::new(Naive),
                ForecasterSpec::Seasonal(period) => Box::new(SeasonalNaive { period: *period }),
                _ => Box::new(Constant(0.0)),
            };
            rolling_frames(values, forecaster.as_ref(), cfg.horizons, cfg.context_len)?
        }
    };
    let mut alignment = align_errors(values, &frames)?;
    if let Some(first) = alignment.first_orphan {
        log::warn!(
            "{} forecast value(s) target indices past the end of the series (first orphan index {first}); ignored",
            alignment.orphan_count
        );
    }
    for row in &mut alignment.errors {
        row.resize(cfg.horizons, None);
    }
    Ok(alignment)
}

/// Scores `input` and writes the score file to `out`.
pub fn cmd_score<W: Write>(cfg: &RunConfig, input: &Path, out: W) -> Result<ScoreSummary> {
    let table = read_series(input)?;
    score_table(cfg, &table, out)
}

pub fn score_table<W: Write>(cfg: &RunConfig, table: &SeriesTable, mut out: W) -> Result<ScoreSummary> {
    let horizons = cfg.horizons;
    let features = table.features();
    let len = table.len();
    let alignments = table
        .columns
        .iter()
        .map(|values| feature_errors(cfg, values, features))
        .collect::<Result<Vec<_>>>()?;
    let orphans = alignments.iter().map(|a| a.orphan_count).sum();

    let calib_end = if cfg.method.needs_calibration() {
        table.split_index.with_context(|| {
            format!("method {} needs a `# split_index=N` line in the series file", cfg.method)
        })?
    } else {
        0
    };
    let mut scorers = Vec::with_capacity(features * horizons);
    for (f, alignment) in alignments.iter().enumerate() {
        for d in 0..horizons {
            let calibration: Vec<f64> = alignment.errors[..calib_end].iter().filter_map(|r| r[d]).collect();
            let scorer = HorizonScorer::new(cfg.method, cfg, &calibration, calib_end)
                .with_context(|| format!("feature `{}`, horizon {}", table.names[f], d + 1))?;
            scorers.push(scorer);
        }
    }

    out.write_all(cfg.header(Mode::Score)?.as_bytes())?;
    write_columns(&mut out, horizons)?;
    let mut detections = 0;
    for start in (0..len).step_by(CHUNK) {
        let end = (start + CHUNK).min(len);
        let block: Vec<Vec<Option<Scored>>> = scorers
            .par_iter_mut()
            .enumerate()
            .map(|(k, scorer)| {
                let (f, d) = (k / horizons, k % horizons);
                (start..end)
                    .map(|t| alignments[f].errors[t][d].map(|s| scorer.step(t, s)).transpose())
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        for t in start..end {
            let row = combine_row(cfg, &block, features, t, t - start)?;
            detections += usize::from(row.detected);
            write_row(&mut out, &row)?;
        }
        out.flush()?;
    }
    Ok(ScoreSummary {
        rows: len,
        features,
        horizons,
        detections,
        orphans,
    })
}

/// Median over horizons within each feature, then the configured combiner
/// across features.
fn combine_row(cfg: &RunConfig, block: &[Vec<Option<Scored>>], features: usize, t: usize, i: usize) -> Result<ScoreRow> {
    let horizons = cfg.horizons;
    let cell = |f: usize, d: usize| block[f * horizons + d][i];
    let across = |values: &[f64]| -> Result<f64> {
        Ok(if values.len() == 1 {
            values[0]
        } else {
            PValue::saturating(cfg.combine.combine(values)?).value()
        })
    };

    let mut warmup = false;
    let mut feature_betas = Vec::with_capacity(features);
    for f in 0..features {
        let available: Vec<Scored> = (0..horizons).filter_map(|d| cell(f, d)).collect();
        if available.is_empty() {
            warmup = true;
            feature_betas.push(1.0);
        } else {
            warmup |= available.iter().any(|s| s.warmup);
            let values: Vec<f64> = available.iter().map(|s| s.pvalue.value()).collect();
            feature_betas.push(PValue::saturating(median_aggregate(&values)?).value());
        }
    }
    let aggregate = across(&feature_betas)?;
    let per_horizon = (0..horizons)
        .map(|d| {
            let values: Vec<f64> = (0..features).filter_map(|f| cell(f, d)).map(|s| s.pvalue.value()).collect();
            if values.is_empty() {
                Ok(None)
            } else {
                across(&values).map(Some)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreRow {
        t,
        aggregate,
        per_horizon,
        detected: detect(PValue::saturating(aggregate), cfg.alpha),
        warmup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Method;
    use crate::scorefile::parse_scores;

    fn run(cfg: &RunConfig, table: &SeriesTable) -> String {
        let mut buf = Vec::new();
        score_table(cfg, table, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    fn univariate(values: Vec<f64>) -> SeriesTable {
        SeriesTable {
            names: vec!["value".into()],
            columns: vec![values],
            labels: None,
            split_index: None,
        }
    }

    #[test]
    fn toy_series_single_horizon() {
        let cfg = RunConfig {
            horizons: 1,
            ..RunConfig::default()
        };
        let text = run(&cfg, &univariate((0..10).map(|i| (i * i) as f64).collect()));
        let scores = parse_scores(&text).unwrap();
        assert_eq!(scores.len(), 10);
        assert_eq!(scores.beta[0], 1.0);
        // index 1 is the first forecast target; its window is empty
        assert_eq!(scores.beta[1], 1.0);
        assert!(text.lines().any(|l| l == "0,1,,0,1"));
    }

    #[test]
    fn fixed_window_equals_frozen_ones_engine() {
        let values: Vec<f64> = (0..700).map(|i| ((i * 37) % 101) as f64 + (i as f64 * 0.1).sin()).collect();
        let table = univariate(values);
        let base = RunConfig {
            horizons: 3,
            window: 200,
            lr: 0.0,
            init: acas_core::WeightInit::Ones,
            ..RunConfig::default()
        };
        let fixed = RunConfig {
            method: Method::FixedWindow,
            ..base.clone()
        };
        let strip = |s: String| s.lines().filter(|l| !l.starts_with('#')).map(String::from).collect::<Vec<_>>();
        assert_eq!(strip(run(&base, &table)), strip(run(&fixed, &table)));
    }

    #[test]
    fn split_methods_require_split_index() {
        let cfg = RunConfig {
            method: Method::SplitConformal,
            horizons: 1,
            ..RunConfig::default()
        };
        let mut table = univariate((0..50).map(|i| (i % 7) as f64).collect());
        let mut buf = Vec::new();
        assert!(score_table(&cfg, &table, &mut buf).is_err());
        table.split_index = Some(20);
        let scores = parse_scores(&run(&cfg, &table)).unwrap();
        assert!(scores.warmup[..20].iter().all(|&w| w));
        assert!(scores.warmup[20..].iter().all(|&w| !w));
    }

    #[test]
    fn multivariate_fisher_of_one_feature_pair() {
        let a: Vec<f64> = (0..300).map(|i| ((i * 13) % 29) as f64).collect();
        let b: Vec<f64> = (0..300).map(|i| ((i * 7) % 31) as f64).collect();
        let cfg = RunConfig {
            horizons: 2,
            combine: acas_core::Combiner::Fisher,
            ..RunConfig::default()
        };
        let table = SeriesTable {
            names: vec!["a".into(), "b".into()],
            columns: vec![a.clone(), b.clone()],
            labels: None,
            split_index: None,
        };
        let both = parse_scores(&run(&cfg, &table)).unwrap();
        let sa = parse_scores(&run(&cfg, &univariate(a))).unwrap();
        let sb = parse_scores(&run(&cfg, &univariate(b))).unwrap();
        for t in 0..300 {
            let expected = acas_core::combine_fisher(&[sa.beta[t], sb.beta[t]]).unwrap();
            assert!((both.beta[t] - expected).abs() < 1e-15, "t={t}");
        }
    }
}
