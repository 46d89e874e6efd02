//! Streaming anomaly scores for forecast errors as adaptively weighted
//! conformal p-values.
//!
//! Each forecast horizon runs a [`HorizonEngine`] that maps the latest
//! nonconformity score to a weighted conformal p-value, then periodically
//! re-learns its lag weights by projected Adam steps on the 1-Wasserstein
//! distance between recent p-values and the uniform distribution. Horizons are
//! merged by the median, features by Fisher's method, the harmonic mean
//! p-value, or the median.

pub mod baselines;
pub mod combine;
pub mod conformal;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod forecasting;
pub mod io;
pub mod optimizer;
pub mod stats;
pub mod synthetic;

pub use baselines::{CalibrationSplit, FixedWindow, GaussianModel, SplitConformal};
pub use combine::{combine_fisher, combine_hmp, Combiner};
pub use conformal::{
    conformal_pvalue, critical_samples, detect, weighted_quantile, PValue, QuantileResult, ScoreWindow,
    WeightVector,
};
pub use engine::{
    median_aggregate, EngineConfig, HorizonEngine, MultiHorizonOutput, MultiHorizonState, StepOutput, WeightInit,
};
pub use error::{AcasError, Result};
pub use forecasting::{align_errors, ForecastFrame, Forecaster, SeriesRecord};
pub use optimizer::{AdamConfig, BatchState, OptimizerState};
