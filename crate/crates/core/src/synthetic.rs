//! Synthetic drifting signals with known means and exact ground-truth
//! p-values.
//!
//! Observations are `Y_t ~ N(mu_t, 1)` scored against a constant-zero
//! forecaster, so the score `|Y_t|` is folded-normal and its true tail
//! probability is available in closed form.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::stats::{normal_cdf, normal_sf};

/// Innovation scale of the random-shift mean recursion.
pub const DRIFT_NOISE: f64 = 0.05;
/// Steps between jumps in the jump-shift setting.
pub const JUMP_PERIOD: usize = 500;
/// Number of upward jumps before the mean starts stepping down.
pub const JUMP_COUNT: usize = 15;

/// How the `0.05` in `N(0, 0.05)` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseScale {
    #[default]
    Variance,
    StdDev,
}

impl NoiseScale {
    pub fn std_dev(self) -> f64 {
        match self {
            NoiseScale::Variance => DRIFT_NOISE.sqrt(),
            NoiseScale::StdDev => DRIFT_NOISE,
        }
    }
}

impl std::str::FromStr for NoiseScale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "variance" => Ok(NoiseScale::Variance),
            "std-dev" => Ok(NoiseScale::StdDev),
            other => Err(format!("unknown noise scale `{other}` (expected variance or std-dev)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftKind {
    Random,
    Jump,
}

impl std::str::FromStr for ShiftKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(ShiftKind::Random),
            "jump" => Ok(ShiftKind::Jump),
            other => Err(format!("unknown shift `{other}` (expected random or jump)")),
        }
    }
}

/// A generated signal with its latent means and true p-values.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTrace {
    pub values: Vec<f64>,
    pub means: Vec<f64>,
    pub truth_pvalues: Vec<f64>,
    pub seed: u64,
}

impl SyntheticTrace {
    fn from_means(means: Vec<f64>, rng: &mut ChaCha8Rng, seed: u64) -> Self {
        let values: Vec<f64> = means
            .iter()
            .map(|&mu| {
                let z: f64 = StandardNormal.sample(rng);
                mu + z
            })
            .collect();
        let truth_pvalues = values
            .iter()
            .zip(&means)
            .map(|(&y, &mu)| ground_truth_pvalue(y.abs(), mu))
            .collect();
        Self {
            values,
            means,
            truth_pvalues,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Nonconformity scores under the constant-zero forecaster.
    pub fn scores(&self) -> Vec<f64> {
        self.values.iter().map(|y| y.abs()).collect()
    }

    /// Writes `t,value,mu,truth_pvalue` rows after a `# seed=` line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# seed={}", self.seed)?;
        writeln!(out, "t,value,mu,truth_pvalue")?;
        for t in 0..self.len() {
            writeln!(
                out,
                "{t},{},{},{}",
                self.values[t], self.means[t], self.truth_pvalues[t]
            )?;
        }
        Ok(())
    }
}

/// Second-order drifting mean: `mu_0 = mu_1 = 0`,
/// `mu_{t+1} = mu_t + (mu_t - mu_{t-1})/2 + eps_t/2`.
pub fn random_shift_means(len: usize, mut innovation: impl FnMut() -> f64) -> Vec<f64> {
    let mut means = vec![0.0; len];
    for t in 1..len.saturating_sub(1) {
        means[t + 1] = means[t] + 0.5 * (means[t] - means[t - 1]) + 0.5 * innovation();
    }
    means
}

/// Staircase mean: up by one every [`JUMP_PERIOD`] steps for [`JUMP_COUNT`]
/// steps, then down by one per period.
pub fn jump_mean(t: usize) -> f64 {
    let level = t / JUMP_PERIOD;
    if level < JUMP_COUNT {
        level as f64
    } else {
        JUMP_COUNT as f64 - level as f64
    }
}

pub fn gen_random_shift(len: usize, seed: u64) -> SyntheticTrace {
    gen_random_shift_with(len, seed, NoiseScale::default())
}

/// Innovations are drawn first, then the observation noise, from one
/// ChaCha8 stream seeded by `seed`.
pub fn gen_random_shift_with(len: usize, seed: u64, scale: NoiseScale) -> SyntheticTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, scale.std_dev()).expect("positive scale");
    let means = random_shift_means(len, || noise.sample(&mut rng));
    SyntheticTrace::from_means(means, &mut rng, seed)
}

pub fn gen_jump_shift(len: usize, seed: u64) -> SyntheticTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means = (0..len).map(jump_mean).collect();
    SyntheticTrace::from_means(means, &mut rng, seed)
}

pub fn generate(kind: ShiftKind, len: usize, seed: u64, scale: NoiseScale) -> SyntheticTrace {
    match kind {
        ShiftKind::Random => gen_random_shift_with(len, seed, scale),
        ShiftKind::Jump => gen_jump_shift(len, seed),
    }
}

/// `P(|N(mu, 1)| > score) = 1 - Φ(score - mu) + Φ(-score - mu)`.
pub fn ground_truth_pvalue(score: f64, mu: f64) -> f64 {
    (normal_sf(score - mu) + normal_cdf(-score - mu)).clamp(f64::MIN_POSITIVE, 1.0)
}
