//! One streaming scorer per horizon, whatever the method.

use acas_core::baselines::{CalibrationSplit, FixedWindow, GaussianModel, SplitConformal};
use acas_core::{HorizonEngine, PValue};
use anyhow::{Context, Result};

use crate::config::{Method, RunConfig};

/// A p-value and whether it was produced before the scorer had enough
/// history to resolve `alpha_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub pvalue: PValue,
    pub warmup: bool,
}

#[derive(Debug, Clone)]
pub enum HorizonScorer {
    Adaptive(HorizonEngine),
    FixedWindow { scorer: FixedWindow, critical: usize },
    Split { scorer: SplitConformal, calib_end: usize },
    Gaussian { model: GaussianModel, calib_end: usize },
}

impl HorizonScorer {
    /// `calibration` is required by the split-conformal and Gaussian
    /// methods: the scores observed before index `calib_end`.
    pub fn new(method: Method, cfg: &RunConfig, calibration: &[f64], calib_end: usize) -> Result<Self> {
        Ok(match method {
            Method::W1Acas => HorizonScorer::Adaptive(HorizonEngine::new(&cfg.engine_config())?),
            Method::FixedWindow => HorizonScorer::FixedWindow {
                scorer: FixedWindow::new(cfg.window),
                critical: cfg.critical_samples()?,
            },
            Method::SplitConformal => {
                let split = CalibrationSplit::new(calibration.to_vec()).context("split-conformal calibration set")?;
                HorizonScorer::Split {
                    scorer: SplitConformal::new(&split),
                    calib_end,
                }
            }
            Method::Gaussian => {
                let split = CalibrationSplit::new(calibration.to_vec()).context("gaussian calibration set")?;
                HorizonScorer::Gaussian {
                    model: GaussianModel::fit(&split).context("fitting gaussian baseline")?,
                    calib_end,
                }
            }
        })
    }

    /// Scores the observation at stream index `t`.
    pub fn step(&mut self, t: usize, score: f64) -> Result<Scored> {
        Ok(match self {
            HorizonScorer::Adaptive(engine) => {
                let out = engine.step(score)?;
                Scored {
                    pvalue: out.pvalue,
                    warmup: out.warmup,
                }
            }
            HorizonScorer::FixedWindow { scorer, critical } => {
                let warmup = scorer.window().len() < *critical;
                Scored {
                    pvalue: scorer.score(score)?,
                    warmup,
                }
            }
            HorizonScorer::Split { scorer, calib_end } => Scored {
                pvalue: scorer.score(score)?,
                warmup: t < *calib_end,
            },
            HorizonScorer::Gaussian { model, calib_end } => Scored {
                pvalue: model.score(score)?,
                warmup: t < *calib_end,
            },
        })
    }
}
