//! Reduction of an m-dependent sequence to a 1-dependent one by block
//! averaging.
//!
//! With `n' = floor((n - 1) / m)` blocks, block `i < n'` averages
//! `X_{(i-1)m+1} .. X_{im}` and the last block `X_{(n'-1)m+1} .. X_n`, so
//! it holds between `m + 1` and `2m` terms. Every block is scaled by `1/m`,
//! which gives `m * sum_i X'_i = sum_i X_i`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::batch::{BatchSource, NeumaierSum, RemainderPolicy, SampleBatch};
use crate::error::{Error, Result};
use crate::params::{
    estimate_nu_windows, extract_sigmas_general, CovarianceSequence, MomentParams, Sigmas,
};
use crate::procgen::{CovarianceModel, ProcessSpec};
use crate::rng::{self, Domain};

/// Block boundaries as closed 1-based intervals of the original index.
pub fn block_ranges(n: usize, m: usize, policy: RemainderPolicy) -> Result<Vec<(usize, usize)>> {
    if m == 0 {
        return Err(Error::Parameter("block size must be at least 1".into()));
    }
    let count = match policy {
        RemainderPolicy::Absorb => n.saturating_sub(1) / m,
        RemainderPolicy::Drop => n / m,
    };
    if count == 0 || n <= m {
        return Err(Error::InsufficientLength { n, m });
    }
    Ok((1..=count)
        .map(|i| {
            let start = (i - 1) * m + 1;
            let end = if i == count && policy == RemainderPolicy::Absorb { n } else { i * m };
            (start, end)
        })
        .collect())
}

/// Block-average a batch with the absorbing remainder policy.
pub fn block_reduce(batch: &SampleBatch, m: usize) -> Result<SampleBatch> {
    block_reduce_with(batch, m, RemainderPolicy::Absorb)
}

pub fn block_reduce_with(batch: &SampleBatch, m: usize, policy: RemainderPolicy) -> Result<SampleBatch> {
    if matches!(batch.source(), BatchSource::Blocked { .. }) {
        return Err(Error::Input("batch is already blocked".into()));
    }
    let ranges = block_ranges(batch.n(), m, policy)?;
    let (n, p) = (batch.n(), batch.p());
    let blocks = ranges.len();
    let mut data = vec![0.0; batch.replicates() * blocks * p];
    data.par_chunks_mut(blocks * p).enumerate().for_each(|(r, dst)| {
        block_path(batch.replicate(r), p, &ranges, m, dst);
    });
    let source = BatchSource::Blocked {
        parent: batch.source().process().clone(),
        block: m,
        original_n: n,
        policy,
    };
    SampleBatch::new(data, batch.replicates(), blocks, p, source, batch.master_seed())
}

/// Blocked version of one time-major path.
pub fn block_path(path: &[f64], p: usize, ranges: &[(usize, usize)], m: usize, out: &mut [f64]) {
    let inv = 1.0 / m as f64;
    for (b, &(start, end)) in ranges.iter().enumerate() {
        let mut acc = vec![NeumaierSum::default(); p];
        for t in start..=end {
            for (a, v) in acc.iter_mut().zip(&path[(t - 1) * p..t * p]) {
                a.add(*v);
            }
        }
        for (o, a) in out[b * p..(b + 1) * p].iter_mut().zip(&acc) {
            *o = a.value() * inv;
        }
    }
}

/// Exact cross-covariances of a blocked stationary process.
#[derive(Debug, Clone)]
pub struct BlockedCovariance {
    cov: CovarianceModel,
    block: usize,
    ranges: Vec<(usize, usize)>,
}

impl BlockedCovariance {
    pub fn new(cov: &CovarianceModel, n: usize, block: usize, policy: RemainderPolicy) -> Result<Self> {
        Ok(Self { cov: cov.clone(), block, ranges: block_ranges(n, block, policy)? })
    }

    pub fn ranges(&self) -> &[(usize, usize)] {
        &self.ranges
    }

    /// Largest absolute entry of `Cov(X'_a, X'_{a+lag})` over all `a`.
    pub fn max_abs_lag_cov(&self, lag: usize) -> f64 {
        (1..=self.len().saturating_sub(lag))
            .map(|a| self.cross_cov(a, a + lag).amax())
            .fold(0.0, f64::max)
    }
}

impl CovarianceSequence for BlockedCovariance {
    fn p(&self) -> usize {
        self.cov.p()
    }

    fn len(&self) -> usize {
        self.ranges.len()
    }

    fn dependence(&self) -> usize {
        self.cov.m().div_ceil(self.block)
    }

    fn cross_cov(&self, a: usize, b: usize) -> DMatrix<f64> {
        let (s0, s1) = self.ranges[a - 1];
        let (t0, t1) = self.ranges[b - 1];
        let m = self.cov.m() as isize;
        let p = self.p();
        let mut out = DMatrix::zeros(p, p);
        // sum over pairs (s, t) grouped by lag t - s
        let lo = (t0 as isize - s1 as isize).max(-m);
        let hi = (t1 as isize - s0 as isize).min(m);
        for lag in lo..=hi {
            let first = (s0 as isize).max(t0 as isize - lag);
            let last = (s1 as isize).min(t1 as isize - lag);
            let count = last - first + 1;
            if count > 0 {
                out += self.cov.lag(lag) * count as f64;
            }
        }
        let inv = 1.0 / self.block as f64;
        out * (inv * inv)
    }
}

/// Assumption constants of the blocked sequence, treated as 1-dependent.
///
/// Covariance constants are exact (through the lag covariances); the
/// moments use Monte Carlo over the two block laws (regular and last).
pub fn blocked_params(
    spec: &ProcessSpec,
    n: usize,
    block: usize,
    policy: RemainderPolicy,
    n_mc: usize,
    seed: u64,
) -> Result<MomentParams> {
    let bc = BlockedCovariance::new(spec.covariance(), n, block, policy)?;
    let sigmas = blocked_sigmas(&bc)?;
    let inv = 1.0 / block as f64;
    let mut windows = vec![(block, inv)];
    let (s, e) = *bc.ranges().last().expect("at least one block");
    if e - s + 1 != block {
        windows.push((e - s + 1, inv));
    }
    let nu = estimate_nu_windows(spec, &windows, n_mc, seed)?;
    Ok(MomentParams::from_parts(sigmas, &nu, bc.len(), 1, seed))
}

pub fn blocked_sigmas(bc: &BlockedCovariance) -> Result<Sigmas> {
    extract_sigmas_general(bc, 1)
}

/// Empirical m-dependence check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DependenceCheck {
    /// Largest absolute empirical cross-covariance entry at lags beyond the tested range.
    pub statistic: f64,
    /// 95th percentile of the same statistic under replicate permutation.
    pub null_p95: f64,
    /// Typical standard error of a single entry.
    pub stderr: f64,
    pub lags: Vec<usize>,
    pub passed: bool,
}

/// Number of permutations drawn for the null distribution.
pub const NULL_PERMUTATIONS: usize = 199;

/// Test whether vectors more than `lag` apart are uncorrelated.
///
/// Uses an anchor `X_a` in the middle of each replicate and the vectors
/// `X_{a+l}` for `l = lag+1 ..= lag+3` (as far as the sequence allows).
/// The statistic is the largest absolute entry of the empirical
/// cross-covariances. Its null distribution comes from re-pairing anchors
/// with the later vectors of a permuted replicate, which is exchangeable
/// with the observed pairing whenever the anchor is independent of them.
pub fn verify_m_dependence(batch: &SampleBatch, lag: usize, seed: u64) -> Result<DependenceCheck> {
    let (n, p, reps) = (batch.n(), batch.p(), batch.replicates());
    if reps < 10 {
        return Err(Error::Parameter("need at least 10 replicates for a dependence check".into()));
    }
    let max_lag = (lag + 3).min(n.saturating_sub(1));
    if max_lag <= lag {
        return Err(Error::InsufficientLength { n, m: lag + 1 });
    }
    let lags: Vec<usize> = (lag + 1..=max_lag).collect();
    let anchor = ((n - max_lag) / 2).max(1);
    let anchors: Vec<&[f64]> = (0..reps).map(|r| batch.x(r, anchor)).collect();
    let later: Vec<Vec<&[f64]>> = (0..reps)
        .map(|r| lags.iter().map(|l| batch.x(r, anchor + l)).collect())
        .collect();

    let stat = |perm: &dyn Fn(usize) -> usize| -> f64 {
        let mut best = 0.0f64;
        for (li, _) in lags.iter().enumerate() {
            for a in 0..p {
                let mean_a = anchors.iter().map(|x| x[a]).sum::<f64>() / reps as f64;
                for b in 0..p {
                    let mean_b = later.iter().map(|x| x[li][b]).sum::<f64>() / reps as f64;
                    let c = (0..reps)
                        .map(|r| (anchors[r][a] - mean_a) * (later[perm(r)][li][b] - mean_b))
                        .sum::<f64>()
                        / (reps - 1) as f64;
                    best = best.max(c.abs());
                }
            }
        }
        best
    };

    let statistic = stat(&|r| r);
    let mut null: Vec<f64> = (0..NULL_PERMUTATIONS)
        .into_par_iter()
        .map(|k| {
            let mut idx: Vec<usize> = (0..reps).collect();
            idx.shuffle(&mut rng::stream(seed, Domain::Permutation, k as u64));
            stat(&|r| idx[r])
        })
        .collect();
    null.sort_by(f64::total_cmp);
    let null_p95 = null[(0.95 * NULL_PERMUTATIONS as f64).ceil() as usize - 1];

    let var_a = (0..p)
        .map(|a| anchors.iter().map(|x| x[a] * x[a]).sum::<f64>() / reps as f64)
        .fold(0.0, f64::max);
    let var_b = (0..p)
        .map(|b| later.iter().map(|x| x[0][b] * x[0][b]).sum::<f64>() / reps as f64)
        .fold(0.0, f64::max);
    let stderr = (var_a * var_b / reps as f64).sqrt();
    Ok(DependenceCheck { statistic, null_p95, stderr, lags, passed: statistic <= null_p95 })
}

/// Sample `replicates` paths of `spec` and run [`verify_m_dependence`].
pub fn verify_m_dependence_spec(
    spec: &Arc<ProcessSpec>,
    n: usize,
    replicates: usize,
    lag: usize,
    seed: u64,
) -> Result<DependenceCheck> {
    let batch = crate::procgen::sample_paths(spec, n, replicates, seed)?;
    verify_m_dependence(&batch, lag, rng::child_seed(seed, 0x7e57))
}
