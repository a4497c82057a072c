//! Rectangle corners and the thickened-boundary band `A_{r,delta}`.
//!
//! The rectangle with corner `r` is the lower orthant `{x : x_k <= r_k for all k}`.
//! The band of half-width `delta` is the outer rectangle at `r + delta*1` with
//! the inner rectangle at `r - delta*1` removed. Writing
//! `w = max_k (x_k - r_k)`, membership reduces to `-delta < w <= delta`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rectangle corner with an optional band half-width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub corner: Vec<f64>,
    pub delta: f64,
}

impl Rectangle {
    pub fn new(corner: Vec<f64>, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::Parameter(format!("band half-width must be finite and >= 0, got {delta}")));
        }
        Ok(Self { corner, delta })
    }

    /// Rectangle without a band (`delta = 0`).
    pub fn orthant(corner: Vec<f64>) -> Self {
        Self { corner, delta: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    /// `x ⪯ r`.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        self.check_dim(x)?;
        Ok(precedes(x, &self.corner))
    }

    /// Membership in `A_{r,delta}`.
    pub fn band_contains(&self, x: &[f64]) -> Result<bool> {
        self.check_dim(x)?;
        Ok(in_band(x, &self.corner, self.delta))
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.corner.len() {
            return Err(Error::Shape(format!(
                "point has dimension {}, rectangle has {}",
                x.len(),
                self.corner.len()
            )));
        }
        Ok(())
    }
}

/// Coordinate-wise order `a ⪯ b`.
#[inline]
pub fn precedes(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// `max_k (x_k - r_k)`.
#[inline]
pub fn max_excess(x: &[f64], r: &[f64]) -> f64 {
    x.iter()
        .zip(r)
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Band test without shape checks; `x ⪯ r + delta*1` and not `x ⪯ r - delta*1`.
#[inline]
pub fn in_band(x: &[f64], r: &[f64], delta: f64) -> bool {
    let mut outer = true;
    let mut inner = true;
    for (a, b) in x.iter().zip(r) {
        if *a > b + delta {
            outer = false;
            break;
        }
        if *a > b - delta {
            inner = false;
        }
    }
    outer && !inner
}

/// Membership of `x` in the band `A_{r,delta}`.
pub fn band_membership(x: &[f64], rect: &Rectangle) -> Result<bool> {
    rect.band_contains(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn corner_itself_is_in_band() {
        let rect = Rectangle::new(vec![0.3, -1.0, 2.0], 0.5).unwrap();
        assert!(band_membership(&[0.3, -1.0, 2.0], &rect).unwrap());
    }

    #[test]
    fn deep_inside_is_not_in_band() {
        let rect = Rectangle::new(vec![0.3, -1.0, 2.0], 0.5).unwrap();
        assert!(!band_membership(&[-0.7, -2.0, 1.0], &rect).unwrap());
    }

    #[test]
    fn one_breaching_coordinate_suffices() {
        let rect = Rectangle::new(vec![0.0, 0.0], 0.5).unwrap();
        assert!(band_membership(&[0.4, -3.0], &rect).unwrap());
        assert!(!band_membership(&[0.6, -3.0], &rect).unwrap());
    }

    #[test]
    fn zero_width_band_is_empty_except_on_boundary() {
        let rect = Rectangle::orthant(vec![0.0, 0.0]);
        assert!(!band_membership(&[-0.1, -0.2], &rect).unwrap());
        assert!(!band_membership(&[0.1, -0.2], &rect).unwrap());
        // w == 0 exactly: outer holds, inner holds too
        assert!(!band_membership(&[0.0, -0.2], &rect).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let rect = Rectangle::orthant(vec![0.0, 0.0]);
        assert!(matches!(band_membership(&[0.0], &rect), Err(Error::Shape(_))));
    }

    #[test]
    fn negative_delta_rejected() {
        assert!(matches!(Rectangle::new(vec![0.0], -0.1), Err(Error::Parameter(_))));
    }

    proptest! {
        #[test]
        fn band_is_outer_minus_inner(
            x in prop::collection::vec(-3.0f64..3.0, 4),
            r in prop::collection::vec(-3.0f64..3.0, 4),
            delta in 0.0f64..2.0,
        ) {
            let rect = Rectangle::new(r.clone(), delta).unwrap();
            let inb = band_membership(&x, &rect).unwrap();
            let up: Vec<f64> = r.iter().map(|v| v + delta).collect();
            let lo: Vec<f64> = r.iter().map(|v| v - delta).collect();
            if inb {
                prop_assert!(precedes(&x, &up));
            }
            if precedes(&x, &lo) {
                prop_assert!(!inb);
            }
            let w = max_excess(&x, &r);
            if (w - delta).abs() > 1e-12 && (w + delta).abs() > 1e-12 {
                prop_assert_eq!(inb, -delta < w && w <= delta);
            }
        }
    }
}
