//! Combination rules for merging per-feature p-values into one score.

use serde::{Deserialize, Serialize};

use crate::engine::median_aggregate;
use crate::error::{AcasError, Result};

/// Smallest p-value fed to the logarithm in Fisher's method.
pub const FISHER_FLOOR: f64 = 1e-300;

fn check(pvalues: &[f64], what: &'static str) -> Result<()> {
    if pvalues.is_empty() {
        return Err(AcasError::EmptyInput(what));
    }
    for &p in pvalues {
        if p.is_nan() {
            return Err(AcasError::NonFinite(what));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(AcasError::OutOfUnitInterval { what, value: p });
        }
    }
    Ok(())
}

/// Upper tail of a chi-square with `2 * dof_half` degrees of freedom.
///
/// For even degrees of freedom the survival function is the Poisson sum
/// `exp(-x) * Σ_{k < dof_half} x^k / k!` with `x = z / 2`, evaluated here in
/// log space.
pub fn chi_square_even_sf(z: f64, dof_half: usize) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    let x = 0.5 * z;
    let log_x = x.ln();
    let mut log_terms = Vec::with_capacity(dof_half);
    let mut log_term = -x;
    for k in 0..dof_half {
        if k > 0 {
            log_term += log_x - (k as f64).ln();
        }
        log_terms.push(log_term);
    }
    let max = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = log_terms.iter().map(|t| (t - max).exp()).sum();
    (max + sum.ln()).exp().min(1.0)
}

/// Fisher's method: chi-square (`2 n_f` dof) survival at `-2 Σ ln p_f`.
pub fn combine_fisher(pvalues: &[f64]) -> Result<f64> {
    check(pvalues, "combine_fisher")?;
    let z: f64 = pvalues.iter().map(|p| -2.0 * p.max(FISHER_FLOOR).ln()).sum();
    Ok(chi_square_even_sf(z, pvalues.len()))
}

/// Harmonic mean p-value `n_f / Σ 1/p_f`.
pub fn combine_hmp(pvalues: &[f64]) -> Result<f64> {
    check(pvalues, "combine_hmp")?;
    if pvalues.contains(&0.0) {
        return Err(AcasError::ZeroPValue("combine_hmp"));
    }
    let inv: f64 = pvalues.iter().map(|p| 1.0 / p).sum();
    Ok(pvalues.len() as f64 / inv)
}

/// Selector for combining several p-values into one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Combiner {
    #[default]
    Median,
    Fisher,
    Hmp,
}

impl Combiner {
    pub fn combine(self, pvalues: &[f64]) -> Result<f64> {
        match self {
            Combiner::Median => median_aggregate(pvalues),
            Combiner::Fisher => combine_fisher(pvalues),
            Combiner::Hmp => combine_hmp(pvalues),
        }
    }
}

impl std::str::FromStr for Combiner {
    type Err = AcasError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(Combiner::Median),
            "fisher" => Ok(Combiner::Fisher),
            "hmp" => Ok(Combiner::Hmp),
            other => Err(AcasError::InvalidConfig(format!("unknown combiner `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn fisher_examples() {
        assert!((combine_fisher(&[0.3]).unwrap() - 0.3).abs() < 1e-14);
        assert_eq!(combine_fisher(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        let v = combine_fisher(&[0.1, 0.1]).unwrap();
        let oracle = ChiSquared::new(4.0).unwrap().sf(-4.0 * 0.1f64.ln());
        assert!((v - oracle).abs() < 1e-12);
        assert!((0.0560..=0.0566).contains(&v));
    }

    #[test]
    fn fisher_tail_matches_statrs_across_dof() {
        for n in 1..30 {
            let chi = ChiSquared::new(2.0 * n as f64).unwrap();
            for z in [0.01, 0.5, 3.0, 10.0, 40.0, 90.0] {
                let ours = chi_square_even_sf(z, n);
                let theirs = chi.sf(z);
                assert!((ours - theirs).abs() <= 1e-10 * theirs.max(1e-300) + 1e-14, "n={n} z={z}");
            }
        }
    }

    #[test]
    fn fisher_handles_zero_and_huge_statistics() {
        let p = combine_fisher(&[0.0, 0.5]).unwrap();
        assert!((0.0..1e-290).contains(&p));
        assert!(combine_fisher(&[]).is_err());
        assert!(combine_fisher(&[1.5]).is_err());
    }

    #[test]
    fn hmp_examples() {
        assert_eq!(combine_hmp(&[0.3]).unwrap(), 0.3);
        assert_eq!(combine_hmp(&[0.1, 0.1]).unwrap(), 0.1);
        assert!((combine_hmp(&[0.01, 1.0]).unwrap() - 2.0 / 101.0).abs() < 1e-15);
        assert_eq!(combine_hmp(&[0.0, 0.5]), Err(AcasError::ZeroPValue("combine_hmp")));
    }

    #[test]
    fn combiner_parses() {
        assert_eq!("fisher".parse::<Combiner>().unwrap(), Combiner::Fisher);
        assert!("mean".parse::<Combiner>().is_err());
    }
}
