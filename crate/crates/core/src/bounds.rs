//! Closed-form Berry-Esseen bound calculators.
//!
//! All logarithms are natural and always appear as `log(e * x) = 1 + ln x`.
//! The absolute constant `C` is an explicit input everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::MomentParams;

fn loge(x: f64) -> f64 {
    1.0 + x.ln()
}

fn check(params: &MomentParams, n: f64, p: usize, c: f64) -> Result<()> {
    params.validate()?;
    if !(n >= 1.0) || !n.is_finite() {
        return Err(Error::Validation(format!("n must be at least 1, got {n}")));
    }
    if p == 0 {
        return Err(Error::Validation("p must be at least 1".into()));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Validation(format!("C must be positive, got {c}")));
    }
    Ok(())
}

/// The two terms of the 1-dependent bound before the `C / sqrt(n)` factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    /// `nu3 / sigma_lower^3 * log(en) log(ep)^2 sqrt(log(epn))`
    pub moment_term: f64,
    /// `nu3^(1/3) sigma_upper^(1/3) / (sigma_min sigma_lower^(1/3)) * log(ep) sqrt(log(epn))`
    pub variance_term: f64,
}

/// Bound terms evaluated at a real sample size.
pub fn bound_terms(params: &MomentParams, n: f64, p: usize) -> BoundTerms {
    let pf = p as f64;
    let lp = loge(pf);
    let lpn = loge(pf * n).sqrt();
    let moment_term = params.nu3 / params.sigma_lower.powi(3) * loge(n) * lp * lp * lpn;
    let variance_term = params.nu3.cbrt() * params.sigma_upper.cbrt()
        / (params.sigma_min * params.sigma_lower.cbrt())
        * lp
        * lpn;
    BoundTerms { moment_term, variance_term }
}

fn bound_at(params: &MomentParams, n: f64, p: usize, c: f64) -> Result<f64> {
    check(params, n, p, c)?;
    let t = bound_terms(params, n, p);
    Ok(c / n.sqrt() * (t.moment_term + t.variance_term))
}

/// Bound on `mu(S X_[1,n], S Y_[1,n])` for 1-dependent sequences.
pub fn theorem_bound(params: &MomentParams, n: usize, p: usize, c: f64) -> Result<f64> {
    bound_at(params, n as f64, p, c)
}

/// The same bound for m-dependent sequences with `n` replaced by
/// `n_eff = n / m` everywhere, including inside the logarithms. `n_eff` is
/// not rounded.
pub fn corollary_bound(params: &MomentParams, n: usize, m: usize, p: usize, c: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::Validation("m must be at least 1".into()));
    }
    if n < m {
        return Err(Error::Validation(format!("n_eff = {n}/{m} is below 1")));
    }
    bound_at(params, n as f64 / m as f64, p, c)
}

/// Smoothing scale selected in the induction step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonStar {
    /// `max(formula, nu1)`.
    pub value: f64,
    pub formula: f64,
    /// Set when the side condition `eps >= nu1` raised the value.
    pub clamped: bool,
    pub c: f64,
}

/// `C ((nu3 / sigma_lower^2) log(en) log(ep)^(3/2) + (nu3 sigma_upper / sigma_lower)^(1/3) sqrt(log(ep)))`,
/// raised to `nu1` if smaller.
pub fn epsilon_star(params: &MomentParams, n: usize, p: usize, c: f64) -> Result<EpsilonStar> {
    let nf = n as f64;
    check(params, nf, p, c)?;
    let lp = loge(p as f64);
    let first = params.nu3 / params.sigma_lower.powi(2) * loge(nf) * lp.powf(1.5);
    let second = (params.nu3 * params.sigma_upper / params.sigma_lower).cbrt() * lp.sqrt();
    let formula = c * (first + second);
    let clamped = formula < params.nu1;
    Ok(EpsilonStar { value: formula.max(params.nu1), formula, clamped, c })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let u = MomentParams::unit(1, 1);
        assert!((theorem_bound(&u, 1, 1, 1.0).unwrap() - 2.0).abs() < 1e-12);
        // independently evaluated: (ln(10e) ln(5e)^2 sqrt(ln(50e)) + ln(5e) sqrt(ln(50e))) / sqrt(10)
        assert!((theorem_bound(&u, 10, 5, 1.0).unwrap() - 17.589_642_131_611_413).abs() < 1e-12);
        assert!((epsilon_star(&u, 1, 1, 1.0).unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn linear_in_c() {
        let u = MomentParams::unit(1, 1);
        let a = theorem_bound(&u, 37, 4, 1.0).unwrap();
        let b = theorem_bound(&u, 37, 4, 3.5).unwrap();
        assert!((b - 3.5 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn corollary_reduces_to_theorem() {
        let u = MomentParams::unit(1, 1);
        for n in [1, 7, 100, 4096] {
            assert_eq!(corollary_bound(&u, n, 1, 3, 1.0).unwrap(), theorem_bound(&u, n, 3, 1.0).unwrap());
        }
        for m in [2, 3, 7] {
            let a = corollary_bound(&u, 10 * m, m, 5, 1.0).unwrap();
            assert!((a - 17.589_642_131_611_413).abs() < 1e-12);
        }
        assert!(matches!(corollary_bound(&u, 3, 4, 1, 1.0), Err(Error::Validation(_))));
        assert!(matches!(corollary_bound(&u, 3, 0, 1, 1.0), Err(Error::Validation(_))));
    }

    #[test]
    fn epsilon_homogeneity_and_clamp() {
        let mut q = MomentParams::unit(1, 1);
        q.sigma_upper = 2.0;
        q.sigma_lower = 2.0;
        let a = epsilon_star(&q, 1, 1, 1.0).unwrap();
        q.nu3 *= 8.0;
        let b = epsilon_star(&q, 1, 1, 1.0).unwrap();
        // first term 1/4 -> 2, second term 1 -> 2
        assert!((a.formula - 1.25).abs() < 1e-12);
        assert!((b.formula - 4.0).abs() < 1e-12);
        q.nu1 = 1e6;
        let c = epsilon_star(&q, 1, 1, 1.0).unwrap();
        assert!(c.clamped);
        assert_eq!(c.value, 1e6);
    }

    #[test]
    fn rejects_nonpositive_params() {
        let mut q = MomentParams::unit(1, 1);
        q.sigma_min = 0.0;
        assert!(matches!(theorem_bound(&q, 10, 1, 1.0), Err(Error::Validation(_))));
        assert!(matches!(theorem_bound(&MomentParams::unit(1, 1), 10, 1, 0.0), Err(Error::Validation(_))));
    }
}
