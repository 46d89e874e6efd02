use crate::conformal::WeightVector;
use crate::error::{AcasError, Result};

const SUM_TOLERANCE: f64 = 1e-10;
const MAX_BISECTIONS: usize = 200;

fn clipped_sum(raw: &[f64], shift: f64) -> f64 {
    raw.iter().map(|&x| (x + shift).clamp(0.0, 1.0)).sum()
}

/// Euclidean projection onto `{w in [0,1]^n : sum(w) >= floor}`.
///
/// The box clip is returned when it already satisfies the sum constraint.
/// Otherwise the constraint is active and the projection is
/// `clip(raw + lambda, 0, 1)` for the `lambda >= 0` that brings the sum to
/// `floor`; the clipped sum is monotone in `lambda`, so it is found by
/// bisection. The returned vector always has `sum >= floor`.
pub fn project_weights(raw: &[f64], floor: f64) -> Result<WeightVector> {
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(AcasError::NonFinite("projection input"));
    }
    if floor > raw.len() as f64 {
        return Err(AcasError::Infeasible {
            floor,
            dim: raw.len(),
        });
    }
    let clipped: Vec<f64> = raw.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    if clipped.iter().sum::<f64>() >= floor {
        return Ok(WeightVector::from_projected(clipped, floor));
    }

    let min_raw = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let mut lo = 0.0;
    // at this shift every coordinate clips to 1, so the sum is n >= floor
    let mut hi = (1.0 - min_raw).max(0.0);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = clipped_sum(raw, mid);
        if s >= floor {
            hi = mid;
            if s - floor <= SUM_TOLERANCE {
                break;
            }
        } else {
            lo = mid;
        }
    }
    let projected = raw.iter().map(|&x| (x + hi).clamp(0.0, 1.0)).collect();
    Ok(WeightVector::from_projected(projected, floor))
}
