//! Diagnostics for the two inductive inequalities linking `mu_i` and
//! `kappa_i(delta)`.
//!
//! The absolute constants in both inequalities are unspecified, so the audit
//! reports the smallest constant consistent with the supplied estimates
//! rather than a pass/fail verdict.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::MomentParams;

/// Settings of an audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSettings {
    pub n: usize,
    pub p: usize,
    /// Band half-width in the `mu -> kappa` inequality.
    pub delta: f64,
    /// Smoothing scale in the `kappa -> mu` inequality.
    pub eps: f64,
    /// Constant `c` in `delta_i = c eps_i sqrt(log(p n))`.
    pub delta_const: f64,
    /// Absolute constant multiplying the `kappa -> mu` right-hand side.
    pub c: f64,
}

/// Per-index ratio contributing to the `mu -> kappa` constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaRatio {
    pub i: usize,
    pub kappa: f64,
    pub denominator: f64,
    pub ratio: f64,
}

/// Term-by-term right-hand side of the `kappa -> mu` inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuRhs {
    /// `C/sqrt(n) (nu3 log(ep)^(3/2) / sigma_lower^3 + eps log(ep) / sigma_min)`
    pub leading: f64,
    /// `C/(p n) nu3 (sigma_upper/(eps^3 sigma_lower) + 1/(eps sigma_lower^2))`
    pub remainder: f64,
    /// The `kappa` feedback term.
    pub feedback: f64,
    /// `sup_{n/2+1 < i <= n} kappa_{i-1}(delta_i) / eps_i`.
    pub kappa_sup: f64,
    pub total: f64,
    /// `(i, eps_i, delta_i)` at every audited index.
    pub scales: Vec<(usize, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub settings: AuditSettings,
    /// Smallest constant making the `mu -> kappa` inequality hold on the grid.
    pub c1: f64,
    pub kappa_ratios: Vec<KappaRatio>,
    pub mu_rhs: MuRhs,
    /// `mu_n` divided by the right-hand side evaluated at `C = 1`, when `mu_n` is known.
    pub c2: Option<f64>,
}

/// `eps_i^2 = eps^2 + max(sigma_lower^2 (n - i) - sigma_upper^2, 0)`.
pub fn eps_i(params: &MomentParams, n: usize, i: usize, eps: f64) -> f64 {
    let extra = params.sigma_lower.powi(2) * (n - i) as f64 - params.sigma_upper.powi(2);
    (eps * eps + extra.max(0.0)).sqrt()
}

/// Audit the two inequalities.
///
/// `grid` lists the indices `i` to audit, `mu` maps `i` to `mu_hat_i`, and
/// `kappa(i, delta)` returns `kappa_hat_i(delta)` when available. Missing
/// values are collected and reported together.
pub fn audit_induction_lemmas(
    grid: &[usize],
    mu: &BTreeMap<usize, f64>,
    kappa: &dyn Fn(usize, f64) -> Option<f64>,
    params: &MomentParams,
    settings: &AuditSettings,
) -> Result<AuditReport> {
    params.validate()?;
    let AuditSettings { n, p, delta, eps, delta_const, c } = *settings;
    if !(eps > 0.0) || !(delta >= 0.0) || !(c > 0.0) || p == 0 {
        return Err(Error::Parameter("need eps > 0, delta >= 0, C > 0, p >= 1".into()));
    }
    let mut gaps = Vec::new();
    if grid.is_empty() {
        gaps.push("grid is empty".to_string());
    }
    if mu.is_empty() {
        gaps.push("no mu estimates".to_string());
    }
    for &i in grid {
        if i == 0 || i > n {
            return Err(Error::Range(format!("grid index {i} outside [1, {n}]")));
        }
        if !mu.contains_key(&i) {
            gaps.push(format!("mu[{i}]"));
        }
    }

    let log_ep = 1.0 + (p as f64).ln();
    let base = (delta + params.nu1) / params.sigma_min * log_ep.sqrt();
    let mut kappa_ratios = Vec::with_capacity(grid.len());
    let mut c1 = 0.0f64;
    for &i in grid {
        let Some(k) = kappa(i, delta) else {
            gaps.push(format!("kappa({i}, {delta})"));
            continue;
        };
        let prior = mu
            .range(..=i.saturating_sub(2))
            .filter(|(j, _)| **j >= 1)
            .map(|(j, v)| (*j as f64).sqrt() * v)
            .fold(0.0, f64::max);
        let denominator = base + prior;
        let ratio = k * (i.saturating_sub(2).max(1) as f64).sqrt() / denominator;
        c1 = c1.max(ratio);
        kappa_ratios.push(KappaRatio { i, kappa: k, denominator, ratio });
    }

    let upper: Vec<usize> = grid.iter().copied().filter(|&i| 2 * i > n + 2 && i >= 2).collect();
    if upper.is_empty() {
        gaps.push(format!("no grid index in ({}, {n}]", n as f64 / 2.0 + 1.0));
    }
    let log_pn = ((p * n) as f64).ln().max(0.0).sqrt();
    let mut kappa_sup = 0.0f64;
    let mut scales = Vec::with_capacity(upper.len());
    for &i in &upper {
        let e = eps_i(params, n, i, eps);
        let d = delta_const * e * log_pn;
        scales.push((i, e, d));
        match kappa(i - 1, d) {
            Some(k) => kappa_sup = kappa_sup.max(k / e),
            None => gaps.push(format!("kappa({}, {d})", i - 1)),
        }
    }
    if !gaps.is_empty() {
        return Err(Error::IncompleteAudit(gaps));
    }

    let (nu3, s_min, s_lo, s_up) = (params.nu3, params.sigma_min, params.sigma_lower, params.sigma_upper);
    let nf = n as f64;
    let leading = c / nf.sqrt() * (nu3 * log_ep.powf(1.5) / s_lo.powi(3) + eps * log_ep / s_min);
    let remainder = c / (p as f64 * nf) * nu3 * (s_up / (eps.powi(3) * s_lo) + 1.0 / (eps * s_lo * s_lo));
    let feedback = c
        * nu3
        * (s_up / (eps * eps * s_lo) + (1.0 + nf.sqrt() * s_lo / eps).ln() / (s_lo * s_lo))
        * log_ep.powf(1.5)
        * kappa_sup;
    let total = leading + remainder + feedback;
    let c2 = mu.get(&n).map(|m| m / (total / c));
    Ok(AuditReport {
        settings: settings.clone(),
        c1,
        kappa_ratios,
        mu_rhs: MuRhs { leading, remainder, feedback, kappa_sup, total, scales },
        c2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(n: usize) -> AuditSettings {
        AuditSettings { n, p: 2, delta: 0.5, eps: 1.0, delta_const: 1.0, c: 1.0 }
    }

    fn full_mu(n: usize, v: f64) -> BTreeMap<usize, f64> {
        (1..=n).map(|i| (i, v)).collect()
    }

    #[test]
    fn zero_estimates_give_zero_constant() {
        let grid: Vec<usize> = (1..=16).collect();
        let r = audit_induction_lemmas(&grid, &full_mu(16, 0.0), &|_, _| Some(0.0), &MomentParams::unit(16, 1), &settings(16))
            .unwrap();
        assert_eq!(r.c1, 0.0);
        assert_eq!(r.mu_rhs.feedback, 0.0);
    }

    #[test]
    fn doubling_kappa_doubles_c1() {
        let grid: Vec<usize> = (1..=16).collect();
        let mu = full_mu(16, 0.05);
        let k = |i: usize, d: f64| Some(0.1 + 0.01 * i as f64 + d * 0.01);
        let a = audit_induction_lemmas(&grid, &mu, &k, &MomentParams::unit(16, 1), &settings(16)).unwrap();
        let k2 = |i: usize, d: f64| k(i, d).map(|v| 2.0 * v);
        let b = audit_induction_lemmas(&grid, &mu, &k2, &MomentParams::unit(16, 1), &settings(16)).unwrap();
        assert!((b.c1 - 2.0 * a.c1).abs() <= 1e-15 * b.c1);
        assert!((b.mu_rhs.kappa_sup - 2.0 * a.mu_rhs.kappa_sup).abs() <= 1e-15 * b.mu_rhs.kappa_sup);
    }

    #[test]
    fn gaps_are_listed() {
        let grid = vec![2, 4, 8];
        let err = audit_induction_lemmas(&grid, &BTreeMap::new(), &|_, _| Some(0.1), &MomentParams::unit(8, 1), &settings(8))
            .unwrap_err();
        match err {
            Error::IncompleteAudit(g) => assert!(g.iter().any(|s| s.contains("mu[4]"))),
            other => panic!("unexpected {other:?}"),
        }
        let mu = full_mu(8, 0.1);
        let err = audit_induction_lemmas(&grid, &mu, &|i, _| (i != 7).then_some(0.1), &MomentParams::unit(8, 1), &settings(8))
            .unwrap_err();
        assert!(matches!(err, Error::IncompleteAudit(g) if g.iter().any(|s| s.starts_with("kappa(7"))));
    }

    #[test]
    fn eps_i_formula() {
        let mut q = MomentParams::unit(10, 1);
        q.sigma_lower = 0.5;
        q.sigma_upper = 1.5;
        // 0.25 * 6 - 2.25 < 0
        assert_eq!(eps_i(&q, 10, 4, 0.7), 0.7);
        // 0.25 * 9 - 2.25 = 0 ; n - i = 9
        assert!((eps_i(&q, 10, 1, 0.7) - 0.7).abs() < 1e-15);
        let e = eps_i(&q, 20, 1, 0.7);
        assert!((e * e - (0.49 + 0.25 * 19.0 - 2.25)).abs() < 1e-12);
    }
}
