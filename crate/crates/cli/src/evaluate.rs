//! `acas evaluate`: oracle threshold selection, AUC-PR and the FPR curve for
//! score files against labelled series.

use std::io::Write;
use std::path::Path;

use acas_core::evaluation::{evaluate_scores, mask, MetricsReport, ThresholdGrid, ThresholdPoint};
use acas_core::io::SeriesTable;
use anyhow::{bail, Context, Result};
use serde::Serialize;

use crate::config::{Mode, RunConfig};
use crate::score::read_series;
use crate::scorefile::{parse_scores, ScoreTable};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesMetrics {
    pub name: String,
    #[serde(flatten)]
    pub report: MetricsReport,
    /// Metric and FPR at every grid threshold; written to the curve file.
    #[serde(skip)]
    pub curve: Vec<ThresholdPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub config: RunConfig,
    pub series: Vec<SeriesMetrics>,
}

pub fn read_scores(path: &Path) -> Result<ScoreTable> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_scores(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Evaluates on the indices at or after the split (all indices without one),
/// minus warm-up rows when `mask_warmup` is set. Scores before the split, when
/// present, serve as the AUC-PR threshold reference.
pub fn evaluate_table(cfg: &RunConfig, name: &str, scores: &ScoreTable, series: &SeriesTable) -> Result<SeriesMetrics> {
    let labels = series
        .labels
        .as_ref()
        .with_context(|| format!("{name}: series has no `label` column"))?;
    if scores.len() != series.len() {
        bail!("{name}: score file has {} rows but the series has {}", scores.len(), series.len());
    }
    if let Some(i) = scores.t.iter().enumerate().position(|(i, &t)| t != i) {
        bail!("{name}: score row {i} has index {} (rows must be consecutive from 0)", scores.t[i]);
    }
    let split = series.split_index.unwrap_or(0);
    let usable: Vec<bool> = scores.warmup.iter().map(|&w| !(cfg.mask_warmup && w)).collect();
    let test: Vec<bool> = usable.iter().enumerate().map(|(t, &u)| u && t >= split).collect();
    let reference: Vec<bool> = usable.iter().enumerate().map(|(t, &u)| u && t < split).collect();

    let betas = mask(&scores.beta, &test);
    let test_labels = mask(labels, &test);
    let reference_betas = mask(&scores.beta, &reference);
    let grid = ThresholdGrid::standard();
    let (report, selection) = evaluate_scores(&betas, &test_labels, &grid, cfg.metric, Some(&reference_betas))
        .with_context(|| format!("{name}: evaluating {} rows", betas.len()))?;
    Ok(SeriesMetrics {
        name: name.to_string(),
        report,
        curve: selection.curve,
    })
}

fn series_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn evaluate_files(cfg: &RunConfig, pairs: &[(&Path, &Path)]) -> Result<EvaluationReport> {
    let series = pairs
        .iter()
        .map(|(scores, series)| {
            let name = series_name(series);
            evaluate_table(cfg, &name, &read_scores(scores)?, &read_series(series)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvaluationReport {
        config: cfg.clone(),
        series,
    })
}

pub fn write_metrics<W: Write>(report: &EvaluationReport, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, report)?;
    writeln!(out)?;
    Ok(())
}

/// `series,threshold,fpr,metric` per grid threshold, after the config header.
pub fn write_curve<W: Write>(report: &EvaluationReport, mut out: W) -> Result<()> {
    out.write_all(report.config.header(Mode::Evaluate)?.as_bytes())?;
    writeln!(out, "series,threshold,fpr,{}", metric_column(report))?;
    for s in &report.series {
        for p in &s.curve {
            writeln!(out, "{},{},{},{}", s.name, p.threshold, p.fpr, p.metric)?;
        }
    }
    Ok(())
}

fn metric_column(report: &EvaluationReport) -> &'static str {
    match report.config.metric {
        acas_core::evaluation::Metric::PaF1 => "pa_f1",
        acas_core::evaluation::Metric::F1 => "f1",
    }
}
