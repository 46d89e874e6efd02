//! Streaming adaptive conformal scoring, one engine per forecast horizon.
//!
//! Each [`HorizonEngine`] turns a stream of nonconformity scores into
//! p-values against its own window of past scores. Weights are indexed by
//! lag, so slot `k` always applies to the score observed `k` steps back. After
//! every `batch` accepted scores the engine takes one projected Adam step on
//! the batch W1 objective; between updates the weights stay frozen.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::conformal::{conformal_pvalue, critical_samples, detect, PValue, ScoreWindow, WeightVector};
use crate::error::{AcasError, Result};
use crate::optimizer::{adam_step, batch_gradient, dbeta_dw, AdamConfig, BatchState, OptimizerState};

/// Initial weight layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WeightInit {
    /// Ones on the `n_c` most recent lags, zeros beyond.
    #[default]
    Critical,
    /// Ones everywhere: a plain equal-weight rolling window.
    Ones,
}

impl std::str::FromStr for WeightInit {
    type Err = AcasError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "critical" => Ok(WeightInit::Critical),
            "ones" => Ok(WeightInit::Ones),
            other => Err(AcasError::InvalidConfig(format!("unknown weight init `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Critical false alarm rate; fixes `n_c = ceil(1/alpha_c) - 1`.
    pub alpha_c: f64,
    /// Maximum number of past scores (`n`).
    pub window: usize,
    /// Scores per weight update (`n_b`).
    pub batch: usize,
    pub adam: AdamConfig,
    /// Number of forecast horizons (`D`).
    pub horizons: usize,
    /// Whether scores flagged at `flag_alpha` still enter the window.
    pub include_flagged: bool,
    pub flag_alpha: f64,
    pub init: WeightInit,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            alpha_c: 0.01,
            window: 2000,
            batch: 10,
            adam: AdamConfig::default(),
            horizons: 15,
            include_flagged: true,
            flag_alpha: 0.01,
            init: WeightInit::Critical,
        }
    }
}

impl EngineConfig {
    pub fn critical_samples(&self) -> Result<usize> {
        critical_samples(self.alpha_c)
    }

    pub fn validate(&self) -> Result<()> {
        let n_c = self.critical_samples()?;
        if n_c > self.window {
            return Err(AcasError::InvalidConfig(format!(
                "window {} is smaller than the {} critical samples implied by alpha_c {}",
                self.window, n_c, self.alpha_c
            )));
        }
        if self.window == 0 || self.batch == 0 || self.horizons == 0 {
            return Err(AcasError::InvalidConfig(
                "window, batch and horizons must be positive".into(),
            ));
        }
        let lr = self.adam.learning_rate;
        if !(lr.is_finite() && lr >= 0.0) {
            return Err(AcasError::InvalidConfig(format!("learning rate {lr} must be >= 0")));
        }
        if !(self.flag_alpha > 0.0 && self.flag_alpha < 1.0) {
            return Err(AcasError::InvalidAlpha(self.flag_alpha));
        }
        Ok(())
    }
}

/// Outcome of one engine step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub pvalue: PValue,
    /// Fewer than `n_c` past scores backed this p-value.
    pub warmup: bool,
    /// The score entered the window and the batch.
    pub accepted: bool,
    /// A weight update ran at the end of this step.
    pub updated: bool,
}

/// One streaming scorer for a single horizon.
#[derive(Debug, Clone)]
pub struct HorizonEngine {
    window: ScoreWindow,
    weights: WeightVector,
    batch: BatchState,
    optimizer: OptimizerState,
    critical: usize,
    include_flagged: bool,
    flag_alpha: f64,
    time_index: u64,
}

impl HorizonEngine {
    pub fn new(config: &EngineConfig) -> Result<Self> {
        config.validate()?;
        let n_c = config.critical_samples()?;
        let weights = match config.init {
            WeightInit::Critical => WeightVector::critical(config.window, n_c)?,
            WeightInit::Ones => WeightVector::ones(config.window, n_c as f64)?,
        };
        Ok(Self {
            window: ScoreWindow::new(config.window),
            weights,
            batch: BatchState::new(config.batch, config.window),
            optimizer: OptimizerState::new(config.window, config.adam),
            critical: n_c,
            include_flagged: config.include_flagged,
            flag_alpha: config.flag_alpha,
            time_index: 0,
        })
    }

    /// Scores `score` against the current window, then folds it in.
    ///
    /// A non-finite score is rejected before any state changes.
    pub fn step(&mut self, score: f64) -> Result<StepOutput> {
        if !score.is_finite() {
            return Err(AcasError::NonFinite("engine score"));
        }
        let len = self.window.len();
        let active = self.weights.active(len);
        let pvalue = conformal_pvalue(&self.window, active, score)?;
        let beta = pvalue.value();
        let warmup = len < self.critical;
        let accepted = self.include_flagged || !detect(pvalue, self.flag_alpha);
        self.time_index += 1;

        let mut updated = false;
        if accepted {
            let weight_sum: f64 = active.iter().sum();
            let window = &self.window;
            self.batch.push_with(beta, |row| {
                for (slot, past) in row.iter_mut().zip(window.iter_lagged()) {
                    *slot = dbeta_dw(beta, past >= score, weight_sum);
                }
            });
            self.window.push(score)?;
            if self.batch.is_full() {
                let gradient = batch_gradient(&self.batch)?;
                self.weights = adam_step(&self.weights, &gradient, &mut self.optimizer)?;
                self.batch.reset();
                updated = true;
            }
        }
        Ok(StepOutput {
            pvalue,
            warmup,
            accepted,
            updated,
        })
    }

    pub fn window(&self) -> &ScoreWindow {
        &self.window
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn batch(&self) -> &BatchState {
        &self.batch
    }

    pub fn optimizer(&self) -> &OptimizerState {
        &self.optimizer
    }

    pub fn critical_samples(&self) -> usize {
        self.critical
    }

    /// Number of steps taken, accepted or not.
    pub fn time_index(&self) -> u64 {
        self.time_index
    }
}

/// Median with the mean-of-middle-pair convention for even lengths.
pub fn median_aggregate(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(AcasError::EmptyInput("median_aggregate"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(AcasError::NonFinite("median_aggregate"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Ok(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    })
}

/// Aggregated and per-horizon p-values for one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiHorizonOutput {
    pub aggregate: PValue,
    /// Indexed by horizon `d - 1`; `None` where no forecast was available.
    pub per_horizon: Vec<Option<PValue>>,
    /// No horizon was available, or one that was is still warming up.
    pub warmup: bool,
}

/// `D` independent horizon engines plus a buffer of pending forecasts keyed by
/// the index they target.
#[derive(Debug, Clone)]
pub struct MultiHorizonState {
    engines: Vec<HorizonEngine>,
    pending: BTreeMap<u64, Vec<Option<f64>>>,
}

impl MultiHorizonState {
    pub fn new(config: &EngineConfig) -> Result<Self> {
        let engines = (0..config.horizons)
            .map(|_| HorizonEngine::new(config))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            engines,
            pending: BTreeMap::new(),
        })
    }

    pub fn horizons(&self) -> usize {
        self.engines.len()
    }

    pub fn engine(&self, horizon: usize) -> &HorizonEngine {
        &self.engines[horizon - 1]
    }

    /// Buffers forecasts issued at `issue_index`; entry `d - 1` targets
    /// `issue_index + d`. Horizons beyond `D` are ignored.
    pub fn push_forecasts(&mut self, issue_index: u64, values: &[Option<f64>]) {
        let horizons = self.engines.len();
        for (d, value) in values.iter().enumerate().take(horizons) {
            if let Some(v) = value {
                let slot = self
                    .pending
                    .entry(issue_index + d as u64 + 1)
                    .or_insert_with(|| vec![None; horizons]);
                slot[d] = Some(*v);
            }
        }
    }

    /// Consumes the buffered forecasts for `index` and scores `observation`.
    pub fn observe(&mut self, index: u64, observation: f64) -> Result<MultiHorizonOutput> {
        let forecasts = self
            .pending
            .remove(&index)
            .unwrap_or_else(|| vec![None; self.engines.len()]);
        // drop anything targeting the past
        self.pending = self.pending.split_off(&index);
        self.step(observation, &forecasts)
    }

    /// Computes `|observation - forecast|` for every available horizon and
    /// steps the matching engines.
    pub fn step(&mut self, observation: f64, forecasts: &[Option<f64>]) -> Result<MultiHorizonOutput> {
        if !observation.is_finite() {
            return Err(AcasError::NonFinite("observation"));
        }
        let scores: Vec<Option<f64>> = (0..self.engines.len())
            .map(|d| forecasts.get(d).copied().flatten().map(|f| (observation - f).abs()))
            .collect();
        self.step_scores(&scores)
    }

    /// Steps each engine that has a score and aggregates by the median.
    pub fn step_scores(&mut self, scores: &[Option<f64>]) -> Result<MultiHorizonOutput> {
        if scores.iter().flatten().any(|s| !s.is_finite()) {
            return Err(AcasError::NonFinite("horizon score"));
        }
        let mut per_horizon = vec![None; self.engines.len()];
        let mut warmup = false;
        for (d, engine) in self.engines.iter_mut().enumerate() {
            if let Some(&Some(s)) = scores.get(d) {
                let out = engine.step(s)?;
                warmup |= out.warmup;
                per_horizon[d] = Some(out.pvalue);
            }
        }
        let available: Vec<f64> = per_horizon.iter().flatten().map(|p| p.value()).collect();
        let aggregate = if available.is_empty() {
            warmup = true;
            PValue::ONE
        } else {
            PValue::saturating(median_aggregate(&available)?)
        };
        Ok(MultiHorizonOutput {
            aggregate,
            per_horizon,
            warmup,
        })
    }
}
