//! Assumption constants: the normalized variance/eigenvalue bounds of
//! interval sums and the sup-norm moments `nu_1`, `nu_3`.
//!
//! For an interval of `len` consecutive terms the ratios are taken against
//! `len * min(m, len)`:
//!
//! ```text
//! sigma_min^2   = min_{i<=j} min_k Var[S X^(k)_[i,j]] / (len * min(m, len))
//! sigma_lower^2 = min_{i<=j} lambda_min(Var[S X_[i,j]]) / (len * min(m, len))
//! sigma_upper^2 = max_{i<=j} lambda_max(Var[S X_[i,j]]) / (len * min(m, len))
//! ```

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianSampler;
use crate::procgen::{map_paths, sum_rows, CovarianceModel, Innovation, ProcessSpec};
use crate::rng::{child_seed, domain_key, Domain};

/// Minimum Monte Carlo size for moment estimation.
pub const MIN_NU_SAMPLES: usize = 1_000;
/// Default Monte Carlo size for moment estimation.
pub const DEFAULT_NU_SAMPLES: usize = 1_000_000;

/// A finite sequence of `p`-vectors described by its cross-covariances.
pub trait CovarianceSequence: Sync {
    fn p(&self) -> usize;
    /// Number of vectors in the sequence.
    fn len(&self) -> usize;
    /// Largest lag with a possibly nonzero cross-covariance.
    fn dependence(&self) -> usize;
    /// `Cov(X_a, X_b)`, 1-based.
    fn cross_cov(&self, a: usize, b: usize) -> DMatrix<f64>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The first `n` terms of a stationary process.
#[derive(Debug, Clone, Copy)]
pub struct StationarySequence<'a> {
    pub cov: &'a CovarianceModel,
    pub n: usize,
}

impl CovarianceSequence for StationarySequence<'_> {
    fn p(&self) -> usize {
        self.cov.p()
    }

    fn len(&self) -> usize {
        self.n
    }

    fn dependence(&self) -> usize {
        self.cov.m()
    }

    fn cross_cov(&self, a: usize, b: usize) -> DMatrix<f64> {
        self.cov.lag(b as isize - a as isize)
    }
}

/// The three normalized covariance constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sigmas {
    pub sigma_min: f64,
    pub sigma_lower: f64,
    pub sigma_upper: f64,
}

/// Assumption constants together with the `(n, m)` they were extracted for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentParams {
    pub sigma_min: f64,
    pub sigma_lower: f64,
    pub sigma_upper: f64,
    pub nu1: f64,
    pub nu3: f64,
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub nu1_stderr: f64,
    #[serde(default)]
    pub nu3_stderr: f64,
    #[serde(default)]
    pub n_mc: usize,
    #[serde(default)]
    pub seed: u64,
}

impl MomentParams {
    pub fn from_parts(sigmas: Sigmas, nu: &NuEstimate, n: usize, m: usize, seed: u64) -> Self {
        Self {
            sigma_min: sigmas.sigma_min,
            sigma_lower: sigmas.sigma_lower,
            sigma_upper: sigmas.sigma_upper,
            nu1: nu.nu1,
            nu3: nu.nu3,
            n,
            m,
            nu1_stderr: nu.nu1_stderr,
            nu3_stderr: nu.nu3_stderr,
            n_mc: nu.n_mc,
            seed,
        }
    }

    /// Every constant equal to one.
    pub fn unit(n: usize, m: usize) -> Self {
        Self {
            sigma_min: 1.0,
            sigma_lower: 1.0,
            sigma_upper: 1.0,
            nu1: 1.0,
            nu3: 1.0,
            n,
            m,
            nu1_stderr: 0.0,
            nu3_stderr: 0.0,
            n_mc: 0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [
            ("sigma_min", self.sigma_min),
            ("sigma_lower", self.sigma_lower),
            ("sigma_upper", self.sigma_upper),
            ("nu1", self.nu1),
            ("nu3", self.nu3),
        ];
        for (name, v) in vals {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Validation(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(())
    }
}

fn eig_extremes(v: &DMatrix<f64>) -> (f64, f64, f64) {
    let min_diag = v.diagonal().min();
    let eig = SymmetricEigen::new(v.clone()).eigenvalues;
    (min_diag, eig.min(), eig.max())
}

fn normalizer(len: usize, m: usize) -> f64 {
    (len * m.min(len)) as f64
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Parameter("m must be at least 1: the normalization len*min(m, len) vanishes at m = 0".into()));
    }
    Ok(())
}

fn reduce(rows: Vec<(usize, f64, f64, f64)>) -> Result<Sigmas> {
    let mut s_min = f64::INFINITY;
    let mut s_low = f64::INFINITY;
    let mut s_up = 0.0f64;
    for (len, d, lo, hi) in rows {
        if !(lo > 0.0) {
            return Err(Error::Degeneracy { len, lambda_min: lo });
        }
        s_min = s_min.min(d);
        s_low = s_low.min(lo);
        s_up = s_up.max(hi);
    }
    Ok(Sigmas { sigma_min: s_min.sqrt(), sigma_lower: s_low.sqrt(), sigma_upper: s_up.sqrt() })
}

/// Constants for the first `n` terms of a stationary process under
/// declared dependence `m`. Only interval lengths matter, so this scans
/// `len = 1..=n`.
pub fn extract_sigmas(spec: &ProcessSpec, n: usize, m: usize) -> Result<Sigmas> {
    extract_sigmas_stationary(spec.covariance(), n, m)
}

pub fn extract_sigmas_stationary(cov: &CovarianceModel, n: usize, m: usize) -> Result<Sigmas> {
    check_m(m)?;
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    let rows: Vec<_> = (1..=n)
        .into_par_iter()
        .map(|len| {
            let (d, lo, hi) = eig_extremes(&cov.sum_covariance_len(len));
            let z = normalizer(len, m);
            (len, d / z, lo / z, hi / z)
        })
        .collect();
    reduce(rows)
}

/// Constants over all `O(n^2)` intervals of an arbitrary sequence. Intended
/// for non-stationary inputs such as blocked sequences.
pub fn extract_sigmas_general(seq: &dyn CovarianceSequence, m: usize) -> Result<Sigmas> {
    check_m(m)?;
    let n = seq.len();
    if n == 0 {
        return Err(Error::Parameter("sequence is empty".into()));
    }
    let dep = seq.dependence();
    let per_start: Vec<Vec<(usize, f64, f64, f64)>> = (1..=n)
        .into_par_iter()
        .map(|i| {
            let p = seq.p();
            let mut v = DMatrix::<f64>::zeros(p, p);
            let mut rows = Vec::with_capacity(n - i + 1);
            for j in i..=n {
                v += seq.cross_cov(j, j);
                for a in j.saturating_sub(dep).max(i)..j {
                    let c = seq.cross_cov(a, j);
                    v += &c + c.transpose();
                }
                let len = j - i + 1;
                let (d, lo, hi) = eig_extremes(&v);
                let z = normalizer(len, m);
                rows.push((len, d / z, lo / z, hi / z));
            }
            rows
        })
        .collect();
    reduce(per_start.into_iter().flatten().collect())
}

/// Monte Carlo sup-norm moments of one family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNormMoments {
    pub m1: f64,
    pub m3: f64,
    pub m1_stderr: f64,
    pub m3_stderr: f64,
}

impl SupNormMoments {
    fn from_samples(samples: &[f64], p: usize) -> Result<Self> {
        let norms: Vec<f64> = samples
            .chunks_exact(p)
            .map(|x| x.iter().fold(0.0f64, |a, v| a.max(v.abs())))
            .collect();
        if norms.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite sample in moment estimation".into()));
        }
        let (m1, se1) = mean_stderr(norms.iter().copied());
        let (m3, se3) = mean_stderr(norms.iter().map(|v| v * v * v));
        Ok(Self { m1, m3, m1_stderr: se1, m3_stderr: se3 })
    }
}

fn mean_stderr(it: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = it.clone().count() as f64;
    let mean = it.clone().sum::<f64>() / n;
    let var = it.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// `nu_1`, `nu_3` as maxima over the sample family and its Gaussian analog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuEstimate {
    pub nu1: f64,
    pub nu3: f64,
    pub nu1_stderr: f64,
    pub nu3_stderr: f64,
    pub x: SupNormMoments,
    pub y: SupNormMoments,
    pub n_mc: usize,
}

impl NuEstimate {
    fn combine(parts: &[(SupNormMoments, SupNormMoments)], n_mc: usize) -> Self {
        let mut best = NuEstimate {
            nu1: f64::NEG_INFINITY,
            nu3: f64::NEG_INFINITY,
            nu1_stderr: 0.0,
            nu3_stderr: 0.0,
            x: parts[0].0,
            y: parts[0].1,
            n_mc,
        };
        for (x, y) in parts {
            for fam in [x, y] {
                if fam.m1 > best.nu1 {
                    best.nu1 = fam.m1;
                    best.nu1_stderr = fam.m1_stderr;
                }
                if fam.m3 > best.nu3 {
                    best.nu3 = fam.m3;
                    best.nu3_stderr = fam.m3_stderr;
                    best.x = *x;
                    best.y = *y;
                }
            }
        }
        best
    }
}

/// Sup-norm moments of `scale * (X_1 + ... + X_window)` and of its Gaussian
/// analog `N(0, scale^2 Var[S X_[1,window]])`.
pub fn window_moments(
    spec: &ProcessSpec,
    window: usize,
    scale: f64,
    n_mc: usize,
    seed: u64,
) -> Result<(SupNormMoments, SupNormMoments)> {
    if n_mc < MIN_NU_SAMPLES {
        return Err(Error::Parameter(format!("n_mc must be at least {MIN_NU_SAMPLES}, got {n_mc}")));
    }
    let p = spec.p();
    let x = if window == 1 && matches!(spec.innovation(), Innovation::Rademacher) && is_signed_permutation(spec) {
        // |X^(k)| = 1 for every coordinate; moments are exactly scale^q
        let s = scale.abs();
        SupNormMoments { m1: s, m3: s * s * s, m1_stderr: 0.0, m3_stderr: 0.0 }
    } else {
        let xs = map_paths(spec, window, n_mc, domain_key(seed, Domain::Moments), |path, out| {
            sum_rows(path, p, out);
            out.iter_mut().for_each(|v| *v *= scale);
        })?;
        SupNormMoments::from_samples(&xs, p)?
    };
    let cov = spec.covariance().sum_covariance_len(window) * (scale * scale);
    let ys = GaussianSampler::new(&cov)?.sample(n_mc, child_seed(seed, 0x59));
    let y = SupNormMoments::from_samples(&ys, p)?;
    Ok((x, y))
}

// i.i.d. process whose single coefficient maps each innovation to one coordinate with sign
fn is_signed_permutation(spec: &ProcessSpec) -> bool {
    if spec.m() != 0 {
        return false;
    }
    let a = &spec.coeffs()[0];
    (0..spec.p()).all(|i| {
        let row = a.row(i);
        row.iter().filter(|v| **v != 0.0).count() == 1 && row.iter().all(|v| *v == 0.0 || v.abs() == 1.0)
    })
}

/// `nu_1`, `nu_3` of a stationary process.
pub fn estimate_nu(spec: &ProcessSpec, n_mc: usize, seed: u64) -> Result<NuEstimate> {
    let parts = window_moments(spec, 1, 1.0, n_mc, seed)?;
    Ok(NuEstimate::combine(&[parts], n_mc))
}

/// `nu_1`, `nu_3` over several window laws (used for blocked sequences, whose
/// last block differs in law from the others).
pub fn estimate_nu_windows(
    spec: &ProcessSpec,
    windows: &[(usize, f64)],
    n_mc: usize,
    seed: u64,
) -> Result<NuEstimate> {
    if windows.is_empty() {
        return Err(Error::Input("no windows given".into()));
    }
    let parts = windows
        .iter()
        .enumerate()
        .map(|(w, &(len, scale))| window_moments(spec, len, scale, n_mc, child_seed(seed, w as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(NuEstimate::combine(&parts, n_mc))
}

/// Every assumption constant of a stationary process.
pub fn extract_params(spec: &ProcessSpec, n: usize, m: usize, n_mc: usize, seed: u64) -> Result<MomentParams> {
    let sigmas = extract_sigmas(spec, n, m)?;
    let nu = estimate_nu(spec, n_mc, seed)?;
    Ok(MomentParams::from_parts(sigmas, &nu, n, m, seed))
}
