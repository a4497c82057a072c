//! Standard normal distribution helpers.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Peak of the standard normal density, `1/sqrt(2 pi)`.
pub const PDF_MAX: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF, computed through `erfc` so both tails keep full
/// relative precision.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}
