//! The covariance-matched Gaussian analog.
//!
//! Only the law of a sum matters for the distances in this crate, so the
//! analog is sampled directly as `N(0, Var[S X_{[i,j]}])` rather than as a
//! path of `Y_i`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::normal;
use crate::rng::{self, Domain};

/// Symmetric square root factor `V diag(sqrt(max(lambda, 0)))` of a PSD matrix.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    p: usize,
    // row-major p x p
    factor: Vec<f64>,
}

impl GaussianSampler {
    /// Validate `cov` and factor it.
    ///
    /// Accepts asymmetry up to `1e-10` (scaled by the largest entry when it
    /// exceeds one) and eigenvalues down to `-1e-10 * trace`; small negative
    /// eigenvalues are clipped to zero.
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        let p = cov.nrows();
        if p == 0 || cov.ncols() != p {
            return Err(Error::Shape(format!("covariance must be square, got {}x{}", cov.nrows(), cov.ncols())));
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("covariance has non-finite entries".into()));
        }
        let scale = cov.amax().max(1.0);
        for i in 0..p {
            for j in (i + 1)..p {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::Validation(format!("covariance is not symmetric at ({i}, {j})")));
                }
            }
        }
        let sym = (cov + cov.transpose()) * 0.5;
        let trace = sym.trace();
        let eig = SymmetricEigen::new(sym);
        let floor = -1e-10 * trace.abs();
        if let Some(bad) = eig.eigenvalues.iter().find(|&&l| l < floor) {
            return Err(Error::Validation(format!("covariance is indefinite (eigenvalue {bad:e})")));
        }
        let mut factor = vec![0.0; p * p];
        for c in 0..p {
            let s = eig.eigenvalues[c].max(0.0).sqrt();
            for r in 0..p {
                factor[r * p + c] = eig.eigenvectors[(r, c)] * s;
            }
        }
        Ok(Self { p, factor })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Draw replicate `index` of the stream `seed` into `out`.
    pub fn sample_into(&self, seed: u64, index: u64, out: &mut [f64]) {
        let mut rng = rng::stream(seed, Domain::Gaussian, index);
        let z: Vec<f64> = (0..self.p).map(|_| rng.sample(StandardNormal)).collect();
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.factor[r * self.p..(r + 1) * self.p]
                .iter()
                .zip(&z)
                .map(|(a, b)| a * b)
                .sum();
        }
    }

    /// `R x p` samples, replicate `r` from stream `r`.
    pub fn sample(&self, replicates: usize, seed: u64) -> Vec<f64> {
        let mut out = vec![0.0; replicates * self.p];
        out.par_chunks_mut(self.p)
            .enumerate()
            .for_each(|(r, dst)| self.sample_into(seed, r as u64, dst));
        out
    }
}

/// `R x p` samples of `N(0, cov)`.
pub fn sample_sum_gaussian(cov: &DMatrix<f64>, replicates: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(GaussianSampler::new(cov)?.sample(replicates, seed))
}

/// Nazarov-type anti-concentration level `C * delta * sqrt(log(e p) / min_k Sigma_kk)`.
pub fn nazarov_bound(delta: f64, min_marginal_var: f64, p: usize, c: f64) -> Result<f64> {
    if !(min_marginal_var > 0.0) {
        return Err(Error::DegenerateVariance(format!("minimum marginal variance {min_marginal_var} must be positive")));
    }
    if !(delta >= 0.0) || p == 0 || !(c > 0.0) {
        return Err(Error::Parameter("need delta >= 0, p >= 1, C > 0".into()));
    }
    Ok(c * delta * (1.0 + (p as f64).ln()).sqrt() / min_marginal_var.sqrt())
}

/// Gaussian-smoothed rectangle CDF `P[x + eps Z ⪯ r] = prod_k Phi((r_k - x_k)/eps)`.
pub fn phi_smoothed(x: &[f64], r: &[f64], eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    if x.len() != r.len() {
        return Err(Error::Shape(format!("x has dimension {}, r has {}", x.len(), r.len())));
    }
    Ok(x.iter().zip(r).map(|(a, b)| normal::cdf((b - a) / eps)).product())
}
