//! Run configuration. Defaults are overridden by an optional TOML file, which
//! is overridden by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use acas_core::evaluation::Metric;
use acas_core::synthetic::{NoiseScale, ShiftKind};
use acas_core::{critical_samples, AdamConfig, Combiner, EngineConfig, WeightInit};
use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

/// Scoring method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    W1Acas,
    FixedWindow,
    SplitConformal,
    Gaussian,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::W1Acas => "w1-acas",
            Method::FixedWindow => "fixed-window",
            Method::SplitConformal => "split-conformal",
            Method::Gaussian => "gaussian",
        }
    }

    /// Whether the method scores against a frozen calibration prefix.
    pub fn needs_calibration(self) -> bool {
        matches!(self, Method::SplitConformal | Method::Gaussian)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "w1-acas" => Ok(Method::W1Acas),
            "fixed-window" => Ok(Method::FixedWindow),
            "split-conformal" => Ok(Method::SplitConformal),
            "gaussian" => Ok(Method::Gaussian),
            other => Err(format!(
                "unknown method `{other}` (expected w1-acas, fixed-window, split-conformal or gaussian)"
            )),
        }
    }
}

/// Where point forecasts come from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ForecasterSpec {
    #[default]
    Naive,
    Seasonal(usize),
    /// Always forecasts zero, so scores are the absolute observations.
    Zero,
    External(PathBuf),
}

impl fmt::Display for ForecasterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForecasterSpec::Naive => f.write_str("naive"),
            ForecasterSpec::Seasonal(p) => write!(f, "seasonal:{p}"),
            ForecasterSpec::Zero => f.write_str("zero"),
            ForecasterSpec::External(path) => write!(f, "external:{}", path.display()),
        }
    }
}

impl FromStr for ForecasterSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "naive" {
            return Ok(ForecasterSpec::Naive);
        }
        if s == "zero" {
            return Ok(ForecasterSpec::Zero);
        }
        if let Some(p) = s.strip_prefix("seasonal:") {
            return match p.parse::<usize>() {
                Ok(p) if p > 0 => Ok(ForecasterSpec::Seasonal(p)),
                _ => Err(format!("seasonal period must be a positive integer, got `{p}`")),
            };
        }
        if let Some(path) = s.strip_prefix("external:") {
            if path.is_empty() {
                return Err("external forecaster needs a path".into());
            }
            return Ok(ForecasterSpec::External(PathBuf::from(path)));
        }
        Err(format!(
            "unknown forecaster `{s}` (expected naive, zero, seasonal:<period> or external:<path>)"
        ))
    }
}

impl TryFrom<String> for ForecasterSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<ForecasterSpec> for String {
    fn from(spec: ForecasterSpec) -> String {
        spec.to_string()
    }
}

/// Fully resolved configuration for one run.
///
/// Serialises (minus `threads`, which never changes results) into the header
/// of every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    pub alpha_c: f64,
    pub window: usize,
    pub batch: usize,
    pub lr: f64,
    pub horizons: usize,
    pub init: WeightInit,
    pub include_flagged: bool,
    pub forecaster: ForecasterSpec,
    pub context_len: usize,
    pub alpha: f64,
    pub combine: Combiner,
    pub metric: Metric,
    pub mask_warmup: bool,
    pub seed: u64,
    #[serde(skip_serializing, default)]
    pub threads: usize,
    pub shift: ShiftKind,
    pub length: usize,
    pub realizations: usize,
    pub calib: usize,
    pub noise_scale: NoiseScale,
    pub methods: Vec<Method>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let engine = EngineConfig::default();
        Self {
            method: Method::W1Acas,
            alpha_c: engine.alpha_c,
            window: engine.window,
            batch: engine.batch,
            lr: engine.adam.learning_rate,
            horizons: engine.horizons,
            init: engine.init,
            include_flagged: engine.include_flagged,
            forecaster: ForecasterSpec::Naive,
            context_len: acas_core::forecasting::DEFAULT_CONTEXT_LEN,
            alpha: 0.01,
            combine: Combiner::Median,
            metric: Metric::PaF1,
            mask_warmup: true,
            seed: 0,
            threads: 0,
            shift: ShiftKind::Jump,
            length: 6000,
            realizations: 15,
            calib: 100,
            noise_scale: NoiseScale::Variance,
            methods: vec![Method::W1Acas, Method::FixedWindow, Method::SplitConformal],
        }
    }
}

/// Which subcommand a configuration is resolved for; simulation changes a
/// few defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Score,
    Simulate,
    Evaluate,
}

impl RunConfig {
    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            alpha_c: self.alpha_c,
            window: self.window,
            batch: self.batch,
            adam: AdamConfig {
                learning_rate: self.lr,
                ..AdamConfig::default()
            },
            horizons: self.horizons,
            include_flagged: self.include_flagged,
            flag_alpha: self.alpha,
            init: self.init,
        }
    }

    pub fn critical_samples(&self) -> Result<usize> {
        Ok(critical_samples(self.alpha_c)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.engine_config().validate()?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            bail!("alpha must lie in (0, 1), got {}", self.alpha);
        }
        if self.context_len == 0 {
            bail!("context_len must be positive");
        }
        if self.realizations == 0 {
            bail!("realizations must be at least 1");
        }
        if self.calib == 0 || self.calib >= self.length {
            bail!("calib must lie in [1, length), got calib={} length={}", self.calib, self.length);
        }
        if self.methods.is_empty() {
            bail!("methods must name at least one method");
        }
        Ok(())
    }

    /// `# key = value` lines describing this configuration; the synthetic
    /// study settings are only echoed for `Mode::Simulate`.
    pub fn header(&self, mode: Mode) -> Result<String> {
        let body = toml::to_string(self).context("serialising effective config")?;
        let simulation_only = |line: &str| {
            let key = line.split(" = ").next().unwrap_or_default();
            SIMULATION_KEYS.contains(&key)
        };
        Ok(body
            .lines()
            .filter(|l| mode == Mode::Simulate || !simulation_only(l))
            .map(|l| format!("# {l}\n"))
            .collect())
    }

    /// Layers defaults, the file named by `--config`, then flags.
    pub fn resolve(mode: Mode, common: &CommonArgs, sim: Option<&SimulationArgs>) -> Result<Self> {
        let mut common = common.clone();
        let mut sim = sim.cloned().unwrap_or_default();
        if let Some(path) = &common.config {
            let (file_common, file_sim) = load_file(path)?;
            common.fill_from(file_common);
            sim.fill_from(file_sim);
        }
        let mut cfg = RunConfig::default();
        common.apply(&mut cfg);
        sim.apply(&mut cfg);
        if mode == Mode::Simulate {
            // one horizon suffices: a constant forecast is identical at
            // every horizon, so further engines would repeat the first
            if common.horizons.is_some_and(|d| d != 1) {
                log::warn!("simulate always runs a single horizon; ignoring horizons setting");
            }
            cfg.horizons = 1;
            if common.forecaster.as_ref().is_some_and(|f| *f != ForecasterSpec::Zero) {
                log::warn!("simulate always uses the constant-zero forecaster");
            }
            cfg.forecaster = ForecasterSpec::Zero;
            if common.batch.is_none() {
                cfg.batch = cfg.critical_samples()?;
            }
            if sim.methods.is_none() && common.method.is_some() {
                cfg.methods = vec![cfg.method];
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Engine, forecasting and evaluation settings shared by every subcommand.
/// Every field is optional so unset flags fall through to the config file.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommonArgs {
    /// TOML file with default settings; flags take precedence.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// w1-acas | fixed-window | split-conformal | gaussian
    #[arg(long)]
    pub method: Option<Method>,
    /// Critical false alarm rate; sets the minimum effective sample size.
    #[arg(long)]
    pub alpha_c: Option<f64>,
    /// Maximum number of past scores per horizon.
    #[arg(long)]
    pub window: Option<usize>,
    /// Scores per weight update.
    #[arg(long)]
    pub batch: Option<usize>,
    /// Adam learning rate; 0 freezes the weights.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Number of forecast horizons.
    #[arg(long)]
    pub horizons: Option<usize>,
    /// Initial weights: critical | ones
    #[arg(long)]
    pub init: Option<WeightInit>,
    /// Whether scores detected as anomalous still enter the window.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub include_flagged: Option<bool>,
    /// naive | zero | seasonal:<period> | external:<path>
    #[arg(long)]
    pub forecaster: Option<ForecasterSpec>,
    /// Context length for built-in forecasters.
    #[arg(long)]
    pub context_len: Option<usize>,
    /// Detection threshold on the p-value.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Feature combination: median | fisher | hmp
    #[arg(long)]
    pub combine: Option<Combiner>,
    /// Threshold-selection metric: pa-f1 | f1
    #[arg(long)]
    pub metric: Option<Metric>,
    /// Drop rows flagged as warm-up from evaluation.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub mask_warmup: Option<bool>,
    /// First synthetic seed (simulate only).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core). Never affects results.
    #[arg(long)]
    pub threads: Option<usize>,
}

const COMMON_KEYS: &[&str] = &[
    "method",
    "alpha_c",
    "window",
    "batch",
    "lr",
    "horizons",
    "init",
    "include_flagged",
    "forecaster",
    "context_len",
    "alpha",
    "combine",
    "metric",
    "mask_warmup",
    "seed",
    "threads",
];

/// Synthetic-study settings.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationArgs {
    /// random | jump
    #[arg(long)]
    pub shift: Option<ShiftKind>,
    /// Samples per realization.
    #[arg(long)]
    pub length: Option<usize>,
    /// Number of seeds, counting up from --seed.
    #[arg(long)]
    pub realizations: Option<usize>,
    /// Length of the calibration prefix (excluded from the report).
    #[arg(long)]
    pub calib: Option<usize>,
    /// Reading of the drift noise level: variance | std-dev
    #[arg(long)]
    pub noise_scale: Option<NoiseScale>,
    /// Comma-separated methods to compare.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
}

const SIMULATION_KEYS: &[&str] = &["shift", "length", "realizations", "calib", "noise_scale", "methods"];

macro_rules! layer {
    ($self:ident, $other:ident; $($field:ident),*) => {
        $( if $self.$field.is_none() { $self.$field = $other.$field; } )*
    };
}

macro_rules! assign {
    ($self:ident, $cfg:ident; $($field:ident),*) => {
        $( if let Some(v) = &$self.$field { $cfg.$field = v.clone(); } )*
    };
}

impl CommonArgs {
    fn fill_from(&mut self, file: CommonArgs) {
        layer!(self, file; method, alpha_c, window, batch, lr, horizons, init, include_flagged, forecaster,
            context_len, alpha, combine, metric, mask_warmup, seed, threads);
    }

    fn apply(&self, cfg: &mut RunConfig) {
        assign!(self, cfg; method, alpha_c, window, batch, lr, horizons, init, include_flagged, forecaster,
            context_len, alpha, combine, metric, mask_warmup, seed, threads);
    }
}

impl SimulationArgs {
    fn fill_from(&mut self, file: SimulationArgs) {
        layer!(self, file; shift, length, realizations, calib, noise_scale, methods);
    }

    fn apply(&self, cfg: &mut RunConfig) {
        assign!(self, cfg; shift, length, realizations, calib, noise_scale, methods);
    }
}

fn load_file(path: &Path) -> Result<(CommonArgs, SimulationArgs)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_file(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn parse_file(text: &str) -> Result<(CommonArgs, SimulationArgs)> {
    let table: toml::Table = text.parse()?;
    let mut common = toml::Table::new();
    let mut sim = toml::Table::new();
    for (key, value) in table {
        if COMMON_KEYS.contains(&key.as_str()) {
            common.insert(key, value);
        } else if SIMULATION_KEYS.contains(&key.as_str()) {
            sim.insert(key, value);
        } else {
            bail!("unknown config key `{key}`");
        }
    }
    Ok((common.try_into()?, sim.try_into()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forecaster_spec_round_trips() {
        for s in ["naive", "zero", "seasonal:7", "external:data/f.csv"] {
            assert_eq!(s.parse::<ForecasterSpec>().unwrap().to_string(), s);
        }
        assert!("seasonal:0".parse::<ForecasterSpec>().is_err());
        assert!("external:".parse::<ForecasterSpec>().is_err());
        assert!("arima".parse::<ForecasterSpec>().is_err());
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let (file, file_sim) = parse_file("window = 500\nlr = 0.01\nshift = \"random\"\nforecaster = \"seasonal:4\"\n").unwrap();
        assert_eq!(file.forecaster, Some(ForecasterSpec::Seasonal(4)));
        assert_eq!(file_sim.shift, Some(ShiftKind::Random));
        let mut flags = CommonArgs {
            lr: Some(0.5),
            ..CommonArgs::default()
        };
        flags.fill_from(file);
        let mut cfg = RunConfig::default();
        flags.apply(&mut cfg);
        assert_eq!(cfg.window, 500);
        assert_eq!(cfg.lr, 0.5);
        assert_eq!(cfg.batch, RunConfig::default().batch);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_file("windw = 3\n").is_err());
        assert!(parse_file("window = \"big\"\n").is_err());
    }

    #[test]
    fn simulate_defaults_batch_to_critical_samples() {
        let cfg = RunConfig::resolve(Mode::Simulate, &CommonArgs::default(), None).unwrap();
        assert_eq!((cfg.batch, cfg.horizons), (99, 1));
        assert_eq!(cfg.forecaster, ForecasterSpec::Zero);
        let common = CommonArgs {
            batch: Some(7),
            method: Some(Method::Gaussian),
            ..CommonArgs::default()
        };
        let cfg = RunConfig::resolve(Mode::Simulate, &common, None).unwrap();
        assert_eq!(cfg.batch, 7);
        assert_eq!(cfg.methods, vec![Method::Gaussian]);
    }

    #[test]
    fn header_omits_threads() {
        let cfg = RunConfig {
            threads: 4,
            ..RunConfig::default()
        };
        let h = cfg.header(Mode::Score).unwrap();
        assert!(h.lines().all(|l| l.starts_with("# ")));
        assert!(!h.contains("threads"));
        assert!(!h.contains("realizations"));
        assert!(h.contains("# method = \"w1-acas\""));
        assert!(cfg.header(Mode::Simulate).unwrap().contains("# realizations = 15"));
    }

    #[test]
    fn invalid_settings_fail_validation() {
        let bad = CommonArgs {
            window: Some(10),
            ..CommonArgs::default()
        };
        assert!(RunConfig::resolve(Mode::Score, &bad, None).is_err());
        let bad = CommonArgs {
            alpha: Some(1.5),
            ..CommonArgs::default()
        };
        assert!(RunConfig::resolve(Mode::Score, &bad, None).is_err());
    }
}
