//! m-dependent moving-average processes.
//!
//! A process is `X_i = sum_{a=0..m} A_a eps_{i-a}` with i.i.d. innovations of
//! unit coordinate variance. The innovation sequence extends to negative
//! indices, so `X_1` already uses `eps_{1-m}..eps_1` and the process is
//! strictly stationary from the first index.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::batch::{BatchSource, NeumaierSum, SampleBatch};
use crate::error::{Error, Result};
use crate::rng::{self, Domain};

/// Default cap on the number of stored floats in a batch (2^27, 1 GiB).
pub const DEFAULT_MEMORY_CAP: usize = 1 << 27;

/// Coordinate-wise innovation law. All laws are centered with unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum Innovation {
    StandardGaussian,
    Rademacher,
    /// `Exp(rate) - 1/rate`, rescaled to unit variance. After rescaling the
    /// law is `Exp(1) - 1` for every rate; the rate is kept for provenance.
    CenteredExponential { rate: f64 },
}

impl Innovation {
    #[inline]
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Innovation::StandardGaussian => rng.sample(StandardNormal),
            Innovation::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Innovation::CenteredExponential { .. } => {
                let e: f64 = rng.sample(Exp1);
                e - 1.0
            }
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Innovation::StandardGaussian)
    }
}

/// A validated m-dependent moving-average process.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    p: usize,
    m: usize,
    coeffs: Vec<DMatrix<f64>>,
    innovation: Innovation,
    // row-major copies of the coefficients for the sampling hot loop
    flat: Vec<f64>,
    cov: CovarianceModel,
}

/// Serialized form: coefficient matrices as nested row lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpecRepr {
    pub p: usize,
    pub m: usize,
    pub coeffs: Vec<Vec<Vec<f64>>>,
    pub innovation: Innovation,
}

impl ProcessSpec {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn innovation(&self) -> Innovation {
        self.innovation
    }

    pub fn covariance(&self) -> &CovarianceModel {
        &self.cov
    }

    pub fn to_repr(&self) -> ProcessSpecRepr {
        ProcessSpecRepr {
            p: self.p,
            m: self.m,
            coeffs: self
                .coeffs
                .iter()
                .map(|a| (0..self.p).map(|i| a.row(i).iter().copied().collect()).collect())
                .collect(),
            innovation: self.innovation,
        }
    }

    pub fn from_repr(repr: &ProcessSpecRepr) -> Result<Self> {
        let mut mats = Vec::with_capacity(repr.coeffs.len());
        for (a, rows) in repr.coeffs.iter().enumerate() {
            if rows.len() != repr.p || rows.iter().any(|r| r.len() != repr.p) {
                return Err(Error::Shape(format!("coefficient matrix A_{a} is not {0}x{0}", repr.p)));
            }
            mats.push(DMatrix::from_fn(repr.p, repr.p, |i, j| rows[i][j]));
        }
        make_ma_process(repr.p, repr.m, mats, repr.innovation)
    }

    /// Canonical JSON used for digests and sidecars.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.to_repr()).expect("spec serializes")
    }

    /// SHA-256 of the canonical JSON.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.canonical_json().as_bytes());
        h.finalize().into()
    }

    /// Fill `out` (length `n*p`, time-major) with one path of the process.
    pub fn sample_path_into(&self, n: usize, master_seed: u64, replicate: u64, out: &mut [f64]) {
        let p = self.p;
        let m = self.m;
        debug_assert_eq!(out.len(), n * p);
        let mut rng = rng::stream(master_seed, Domain::Process, replicate);
        // ring buffer of the last m+1 innovations; slot (t mod (m+1)) holds eps_t
        let slots = m + 1;
        let mut ring = vec![0.0; slots * p];
        // eps_{1-m}..eps_0 occupy the ring before the first output
        for t in 0..m {
            let slot = t % slots;
            for k in 0..p {
                ring[slot * p + k] = self.innovation.draw(&mut rng);
            }
        }
        for i in 0..n {
            let t = i + m;
            let slot = t % slots;
            for k in 0..p {
                ring[slot * p + k] = self.innovation.draw(&mut rng);
            }
            let x = &mut out[i * p..(i + 1) * p];
            x.fill(0.0);
            for a in 0..=m {
                let eps = &ring[((t - a) % slots) * p..((t - a) % slots + 1) * p];
                let coeff = &self.flat[a * p * p..(a + 1) * p * p];
                for (row, xr) in x.iter_mut().enumerate() {
                    let c = &coeff[row * p..(row + 1) * p];
                    *xr += c.iter().zip(eps).map(|(u, v)| u * v).sum::<f64>();
                }
            }
        }
    }
}

/// Build and validate a moving-average process.
pub fn make_ma_process(
    p: usize,
    m: usize,
    coeffs: Vec<DMatrix<f64>>,
    innovation: Innovation,
) -> Result<ProcessSpec> {
    if p == 0 {
        return Err(Error::Shape("dimension p must be positive".into()));
    }
    if coeffs.len() != m + 1 {
        return Err(Error::Shape(format!("expected {} coefficient matrices, got {}", m + 1, coeffs.len())));
    }
    for (a, c) in coeffs.iter().enumerate() {
        if c.nrows() != p || c.ncols() != p {
            return Err(Error::Shape(format!(
                "coefficient A_{a} is {}x{}, expected {p}x{p}",
                c.nrows(),
                c.ncols()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("coefficient A_{a} has non-finite entries")));
        }
    }
    if coeffs.iter().all(|c| c.iter().all(|&v| v == 0.0)) {
        return Err(Error::DegenerateProcess("all coefficient matrices are zero".into()));
    }
    if let Innovation::CenteredExponential { rate } = innovation {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Parameter(format!("exponential rate must be positive, got {rate}")));
        }
    }
    let mut flat = Vec::with_capacity((m + 1) * p * p);
    for c in &coeffs {
        for i in 0..p {
            for j in 0..p {
                flat.push(c[(i, j)]);
            }
        }
    }
    let cov = CovarianceModel::from_coeffs(&coeffs);
    Ok(ProcessSpec { p, m, coeffs, innovation, flat, cov })
}

/// `Cov(X_i, X_{i+l})` for `l = 0..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    lag_covs: Vec<DMatrix<f64>>,
}

impl CovarianceModel {
    fn from_coeffs(coeffs: &[DMatrix<f64>]) -> Self {
        let m = coeffs.len() - 1;
        let lag_covs = (0..=m)
            .map(|l| {
                let p = coeffs[0].nrows();
                let mut g = DMatrix::zeros(p, p);
                for a in 0..=(m - l) {
                    g += &coeffs[a] * coeffs[a + l].transpose();
                }
                g
            })
            .collect();
        Self { lag_covs }
    }

    /// Build from externally supplied lag covariances `Gamma_0..Gamma_m`.
    pub fn from_lag_covs(lag_covs: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = lag_covs.first() else {
            return Err(Error::Input("at least Gamma_0 is required".into()));
        };
        let p = first.nrows();
        if lag_covs.iter().any(|g| g.nrows() != p || g.ncols() != p) {
            return Err(Error::Shape("lag covariances must all be p x p".into()));
        }
        Ok(Self { lag_covs })
    }

    pub fn p(&self) -> usize {
        self.lag_covs[0].nrows()
    }

    pub fn m(&self) -> usize {
        self.lag_covs.len() - 1
    }

    /// `Cov(X_i, X_{i+lag})`; zero beyond the dependence range. Negative
    /// lags return the transpose.
    pub fn lag(&self, lag: isize) -> DMatrix<f64> {
        let l = lag.unsigned_abs();
        if l >= self.lag_covs.len() {
            let p = self.p();
            return DMatrix::zeros(p, p);
        }
        if lag >= 0 {
            self.lag_covs[l].clone()
        } else {
            self.lag_covs[l].transpose()
        }
    }

    pub fn lag_covs(&self) -> &[DMatrix<f64>] {
        &self.lag_covs
    }

    /// `Var[S X_{[i,j]}]` for an interval of `len` consecutive terms.
    pub fn sum_covariance_len(&self, len: usize) -> DMatrix<f64> {
        let p = self.p();
        if len == 0 {
            return DMatrix::zeros(p, p);
        }
        let mut v = &self.lag_covs[0] * len as f64;
        for l in 1..=self.m().min(len - 1) {
            let g = &self.lag_covs[l];
            v += (g + g.transpose()) * (len - l) as f64;
        }
        v
    }
}

/// `Var[S X_{[i,j]}]` for `1 <= i <= j` (closed interval).
pub fn sum_covariance(spec: &ProcessSpec, i: usize, j: usize) -> Result<DMatrix<f64>> {
    if i == 0 || j < i {
        return Err(Error::Range(format!("interval [{i}, {j}] must satisfy 1 <= i <= j")));
    }
    Ok(spec.cov.sum_covariance_len(j - i + 1))
}

/// Sample `replicates` independent paths of length `n`.
///
/// Fails with [`Error::Capacity`] when the batch would exceed `memory_cap`
/// floats; [`sample_sums`] streams the same paths without storing them.
pub fn sample_paths_capped(
    spec: &Arc<ProcessSpec>,
    n: usize,
    replicates: usize,
    master_seed: u64,
    memory_cap: usize,
) -> Result<SampleBatch> {
    if n == 0 || replicates == 0 {
        return Err(Error::Parameter("n and R must be at least 1".into()));
    }
    let p = spec.p;
    let requested = replicates
        .checked_mul(n)
        .and_then(|v| v.checked_mul(p))
        .ok_or(Error::Capacity { requested: usize::MAX, cap: memory_cap })?;
    // data plus its prefix table
    if requested.saturating_mul(2) > memory_cap {
        return Err(Error::Capacity { requested, cap: memory_cap });
    }
    let mut data = vec![0.0; requested];
    data.par_chunks_mut(n * p).enumerate().for_each(|(r, chunk)| {
        spec.sample_path_into(n, master_seed, r as u64, chunk);
    });
    SampleBatch::new(data, replicates, n, p, BatchSource::Process(spec.clone()), master_seed)
}

pub fn sample_paths(spec: &Arc<ProcessSpec>, n: usize, replicates: usize, master_seed: u64) -> Result<SampleBatch> {
    sample_paths_capped(spec, n, replicates, master_seed, DEFAULT_MEMORY_CAP)
}

/// Streaming `S X_{[1,n]}` per replicate (`R x p`), bit-identical to
/// `sample_paths(..).prefix_sum(1, n)`.
pub fn sample_sums(spec: &ProcessSpec, n: usize, replicates: usize, master_seed: u64) -> Result<Vec<f64>> {
    map_paths(spec, n, replicates, master_seed, |path, out| {
        sum_rows(path, spec.p, out);
    })
}

/// Run `f(path, out)` on every replicate path and collect the `p`-vectors it
/// writes, in replicate order.
pub fn map_paths<F>(spec: &ProcessSpec, n: usize, replicates: usize, master_seed: u64, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    map_paths_width(spec, n, replicates, master_seed, spec.p, f)
}

/// [`map_paths`] with `width` output values per replicate.
pub fn map_paths_width<F>(
    spec: &ProcessSpec,
    n: usize,
    replicates: usize,
    master_seed: u64,
    width: usize,
    f: F,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    if n == 0 || replicates == 0 || width == 0 {
        return Err(Error::Parameter("n, R and the output width must be at least 1".into()));
    }
    let p = spec.p;
    let mut out = vec![0.0; replicates * width];
    out.par_chunks_mut(width).enumerate().for_each_init(
        || vec![0.0; n * p],
        |path, (r, dst)| {
            spec.sample_path_into(n, master_seed, r as u64, path);
            f(path, dst);
        },
    );
    Ok(out)
}

/// Compensated column sums of a time-major `len x p` block.
pub fn sum_rows(rows: &[f64], p: usize, out: &mut [f64]) {
    let mut acc = vec![NeumaierSum::default(); p];
    for row in rows.chunks_exact(p) {
        for (a, v) in acc.iter_mut().zip(row) {
            a.add(*v);
        }
    }
    for (o, a) in out.iter_mut().zip(&acc) {
        *o = a.value();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn ma1(theta: f64, innovation: Innovation) -> ProcessSpec {
        make_ma_process(1, 1, vec![dmatrix![1.0], dmatrix![theta]], innovation).unwrap()
    }

    #[test]
    fn iid_scalar_covariance() {
        let s = make_ma_process(1, 0, vec![dmatrix![1.0]], Innovation::StandardGaussian).unwrap();
        assert_eq!(s.covariance().lag(0)[(0, 0)], 1.0);
        assert_eq!(s.covariance().lag(1)[(0, 0)], 0.0);
    }

    #[test]
    fn ma1_lag_covariances() {
        let s = ma1(0.5, Innovation::StandardGaussian);
        assert!((s.covariance().lag(0)[(0, 0)] - 1.25).abs() < 1e-15);
        assert!((s.covariance().lag(1)[(0, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(s.covariance().lag(2)[(0, 0)], 0.0);
    }

    #[test]
    fn declared_lag_with_zero_coefficient() {
        let s = make_ma_process(
            2,
            1,
            vec![DMatrix::identity(2, 2), DMatrix::zeros(2, 2)],
            Innovation::StandardGaussian,
        )
        .unwrap();
        assert_eq!(s.covariance().lag(1), DMatrix::zeros(2, 2));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            make_ma_process(1, 1, vec![dmatrix![0.0], dmatrix![0.0]], Innovation::Rademacher),
            Err(Error::DegenerateProcess(_))
        ));
        assert!(matches!(
            make_ma_process(2, 0, vec![dmatrix![1.0]], Innovation::Rademacher),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            make_ma_process(1, 1, vec![dmatrix![1.0]], Innovation::Rademacher),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            make_ma_process(1, 0, vec![dmatrix![f64::NAN]], Innovation::Rademacher),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn sum_covariance_examples() {
        let s = ma1(0.5, Innovation::StandardGaussian);
        assert!((sum_covariance(&s, 1, 4).unwrap()[(0, 0)] - 8.0).abs() < 1e-12);
        assert!((sum_covariance(&s, 3, 3).unwrap()[(0, 0)] - 1.25).abs() < 1e-15);
        assert!(matches!(sum_covariance(&s, 0, 3), Err(Error::Range(_))));
        assert!(matches!(sum_covariance(&s, 4, 3), Err(Error::Range(_))));
        let iid = make_ma_process(1, 0, vec![dmatrix![2.0]], Innovation::Rademacher).unwrap();
        assert!((sum_covariance(&iid, 1, 7).unwrap()[(0, 0)] - 28.0).abs() < 1e-12);
    }

    #[test]
    fn repr_roundtrip() {
        let s = make_ma_process(
            2,
            1,
            vec![dmatrix![1.0, 0.2; 0.0, 1.0], dmatrix![0.5, 0.0; 0.1, 0.3]],
            Innovation::CenteredExponential { rate: 2.0 },
        )
        .unwrap();
        let json = s.canonical_json();
        let repr: ProcessSpecRepr = serde_json::from_str(&json).unwrap();
        assert_eq!(ProcessSpec::from_repr(&repr).unwrap(), s);
    }

    #[test]
    fn streamed_sums_match_batch() {
        let s = Arc::new(ma1(0.5, Innovation::Rademacher));
        let batch = sample_paths(&s, 17, 9, 3).unwrap();
        let sums = sample_sums(&s, 17, 9, 3).unwrap();
        assert_eq!(batch.prefix_sum(1, 17).unwrap(), sums);
    }

    #[test]
    fn capacity_error() {
        let s = Arc::new(ma1(0.5, Innovation::Rademacher));
        assert!(matches!(sample_paths_capped(&s, 100, 100, 0, 1000), Err(Error::Capacity { .. })));
    }
}
