//! Piecewise-linear smoothing of the band indicator.
//!
//! With `w = max_k (x_k - r_k)`, `f_eps` ramps up from 0 to 1 on
//! `(-delta - eps, -delta]`, stays at 1 on `(-delta, delta]` and ramps back
//! down on `(delta, delta + eps]`. It dominates `1{x in A_{r,delta}}`, and off
//! its kinks the gradient is `±1/eps` along the argmax coordinate, so
//!
//! ```text
//! |grad f_eps(x)|_1 = (1/eps) (1{x in A_{r-(delta+eps/2)1, eps/2}} + 1{x in A_{r+(delta+eps/2)1, eps/2}})
//! ```

use crate::error::{Error, Result};
use crate::rect::{in_band, max_excess};

/// Distance from a kink below which the gradient is treated as undefined.
pub const KINK_GUARD: f64 = 1e-9;

fn check(x: &[f64], r: &[f64], delta: f64, eps: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    if !(delta >= 0.0) {
        return Err(Error::Parameter(format!("delta must be >= 0, got {delta}")));
    }
    if x.len() != r.len() || x.is_empty() {
        return Err(Error::Shape(format!("x has dimension {}, r has {}", x.len(), r.len())));
    }
    Ok(())
}

/// The ramp profile as a function of `w`.
pub fn smoothing_profile(w: f64, delta: f64, eps: f64) -> f64 {
    if w <= -delta - eps {
        0.0
    } else if w <= -delta {
        (w + delta + eps) / eps
    } else if w <= delta {
        1.0
    } else if w <= delta + eps {
        (delta + eps - w) / eps
    } else {
        0.0
    }
}

/// `f_eps(x)` for corner `r` and band half-width `delta`.
pub fn smoothing_f(x: &[f64], r: &[f64], delta: f64, eps: f64) -> Result<f64> {
    check(x, r, delta, eps)?;
    Ok(smoothing_profile(max_excess(x, r), delta, eps))
}

/// `|grad f_eps(x)|_1` through the band-indicator identity.
///
/// Returns [`Error::UndefinedPoint`] within [`KINK_GUARD`] of a kink of the
/// profile or when the argmax coordinate of `x - r` is not unique.
pub fn grad_f_l1(x: &[f64], r: &[f64], delta: f64, eps: f64) -> Result<f64> {
    check(x, r, delta, eps)?;
    let mut top = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for (a, b) in x.iter().zip(r) {
        let v = a - b;
        if v > top {
            second = top;
            top = v;
        } else if v > second {
            second = v;
        }
    }
    let w = top;
    let kinks = [w + delta + eps, w + delta, w - delta, w - delta - eps];
    if kinks.iter().any(|k| k.abs() <= KINK_GUARD) || (x.len() > 1 && top - second <= KINK_GUARD) {
        return Err(Error::UndefinedPoint);
    }
    let half = eps / 2.0;
    let shift = delta + half;
    let lower: Vec<f64> = r.iter().map(|v| v - shift).collect();
    let upper: Vec<f64> = r.iter().map(|v| v + shift).collect();
    let hits = in_band(x, &lower, half) as u8 + in_band(x, &upper, half) as u8;
    Ok(hits as f64 / eps)
}
