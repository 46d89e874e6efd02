//! Standard-normal tail helpers.

use libm::erfc;
use std::f64::consts::SQRT_2;

/// `Φ(x)`, computed through `erfc` so the lower tail keeps full precision.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `1 - Φ(x)` without cancellation in the upper tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}
