//! Empirical 1-Wasserstein distance between a batch of p-values and the
//! uniform distribution, and its closed-form partial derivatives.
//!
//! With `b_(1) <= ... <= b_(n)` the sorted batch, the distance is the sum over
//! quantile buckets `[(k-1)/n, k/n]` of `∫ |b_(k) - a| da`. Each integrand is
//! piecewise linear with at most one kink, so every bucket integral has a
//! closed form.

use crate::error::{AcasError, Result};

/// `∫_lo^hi |beta - a| da` in closed form.
pub(crate) fn bucket_integral(beta: f64, lo: f64, hi: f64) -> f64 {
    if beta <= lo {
        0.5 * ((hi - beta).powi(2) - (lo - beta).powi(2))
    } else if beta >= hi {
        0.5 * ((beta - lo).powi(2) - (beta - hi).powi(2))
    } else {
        0.5 * ((beta - lo).powi(2) + (hi - beta).powi(2))
    }
}

fn check_unit(values: &[f64], what: &'static str) -> Result<()> {
    for &v in values {
        if v.is_nan() {
            return Err(AcasError::NonFinite(what));
        }
        if !(0.0..=1.0).contains(&v) {
            return Err(AcasError::OutOfUnitInterval { what, value: v });
        }
    }
    Ok(())
}

/// Empirical W1 distance to `U[0, 1]` for any number of samples.
pub fn empirical_w1(betas: &[f64]) -> Result<f64> {
    if betas.is_empty() {
        return Err(AcasError::EmptyInput("empirical_w1"));
    }
    check_unit(betas, "empirical_w1")?;
    let mut sorted = betas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(k, &b)| bucket_integral(b, k as f64 / n, (k + 1) as f64 / n))
        .sum())
}

/// `∂W1/∂beta` for a batch entry whose sorted position is `rank` (1-based).
///
/// Bucket boundaries take the middle branch, which is continuous with both
/// outer branches.
pub fn dw1_dbeta(beta: f64, rank: usize, batch_len: usize) -> Result<f64> {
    if rank == 0 || rank > batch_len {
        return Err(AcasError::RankOutOfRange { rank, len: batch_len });
    }
    let n = batch_len as f64;
    let lo = (rank - 1) as f64 / n;
    let hi = rank as f64 / n;
    Ok(if beta < lo {
        -1.0 / n
    } else if beta > hi {
        1.0 / n
    } else {
        2.0 * beta - (2 * rank - 1) as f64 / n
    })
}

/// `∂beta/∂w_k = (1[S_k >= s] - beta) / (|w| + 1)`.
pub fn dbeta_dw(beta: f64, exceeds: bool, weight_sum: f64) -> f64 {
    let indicator = if exceeds { 1.0 } else { 0.0 };
    (indicator - beta) / (weight_sum + 1.0)
}

/// Ranks (1-based) of each entry in a stable ascending sort, ties broken by
/// position.
pub fn stable_ranks(betas: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..betas.len()).collect();
    order.sort_by(|&a, &b| betas[a].total_cmp(&betas[b]));
    let mut ranks = vec![0; betas.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Bucket-aligned trapezoid rule on the quantile-function gap.
    fn w1_by_quadrature(betas: &[f64], points: usize) -> f64 {
        let mut sorted = betas.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len();
        let per = points / n;
        let mut total = 0.0;
        for (k, &b) in sorted.iter().enumerate() {
            let lo = k as f64 / n as f64;
            let h = 1.0 / (n as f64 * per as f64);
            let f = |j: usize| (b - (lo + j as f64 * h)).abs();
            let mut acc = 0.5 * (f(0) + f(per));
            for j in 1..per {
                acc += f(j);
            }
            total += acc * h;
        }
        total
    }

    #[test]
    fn w1_examples() {
        assert!((empirical_w1(&[0.25, 0.75]).unwrap() - 0.125).abs() < 1e-15);
        assert!((empirical_w1(&[1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(empirical_w1(&[]).is_err());
        assert!(empirical_w1(&[1.5]).is_err());
    }

    #[test]
    fn w1_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let n = rng.random_range(1..=16);
            let betas: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let exact = empirical_w1(&betas).unwrap();
            let approx = w1_by_quadrature(&betas, 1_000_000);
            assert!((exact - approx).abs() <= 1e-9, "{exact} vs {approx}");
        }
    }

    #[test]
    fn midpoints_minimize_w1() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 1..=12 {
            let mid: Vec<f64> = (1..=n).map(|k| (2 * k - 1) as f64 / (2 * n) as f64).collect();
            let best = empirical_w1(&mid).unwrap();
            assert!((best - 1.0 / (4.0 * n as f64)).abs() < 1e-14);
            for _ in 0..50 {
                let perturbed: Vec<f64> = mid
                    .iter()
                    .map(|m| (m + rng.random_range(-0.2..0.2)).clamp(0.0, 1.0))
                    .collect();
                assert!(best <= empirical_w1(&perturbed).unwrap() + 1e-15);
            }
        }
    }

    #[test]
    fn dw1_examples_and_continuity() {
        assert!(dw1_dbeta(0.25, 3, 10).unwrap().abs() < 1e-15);
        assert!((dw1_dbeta(0.10, 3, 10).unwrap() + 0.1).abs() < 1e-15);
        assert!((dw1_dbeta(0.95, 3, 10).unwrap() - 0.1).abs() < 1e-15);
        for n in 1..20 {
            for k in 1..=n {
                let lo = (k - 1) as f64 / n as f64;
                let hi = k as f64 / n as f64;
                assert!((dw1_dbeta(lo, k, n).unwrap() + 1.0 / n as f64).abs() < 1e-12);
                assert!((dw1_dbeta(hi, k, n).unwrap() - 1.0 / n as f64).abs() < 1e-12);
            }
        }
        assert!(dw1_dbeta(0.5, 0, 4).is_err());
        assert!(dw1_dbeta(0.5, 5, 4).is_err());
    }

    #[test]
    fn dbeta_dw_examples() {
        assert!((dbeta_dw(0.3, true, 9.0) - 0.07).abs() < 1e-15);
        assert!((dbeta_dw(0.3, false, 9.0) + 0.03).abs() < 1e-15);
    }

    #[test]
    fn ranks_are_stable() {
        assert_eq!(stable_ranks(&[0.5, 0.1, 0.5, 0.2]), vec![3, 1, 4, 2]);
    }
}
