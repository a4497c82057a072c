//! Replicated sample paths and the summation operator `S`.
//!
//! Intervals are closed and 1-based: `prefix_sum(i, j)` returns
//! `X_i + ... + X_j`. The half-open `S X_{[i,j)}` of the same sequence is
//! `prefix_sum(i, j - 1)`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::procgen::ProcessSpec;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// How the last block treats terms that do not fill a whole block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemainderPolicy {
    /// The last block absorbs the remainder (up to `2m - 1` terms).
    Absorb,
    /// Only whole blocks of `m` terms are kept; trailing terms are dropped.
    Drop,
}

/// Where a batch came from.
#[derive(Debug, Clone, PartialEq)]
pub enum BatchSource {
    Process(Arc<ProcessSpec>),
    /// Output of block reduction; there is no moving-average representation,
    /// so the parent process and block geometry are kept instead.
    Blocked {
        parent: Arc<ProcessSpec>,
        block: usize,
        original_n: usize,
        policy: RemainderPolicy,
    },
}

impl BatchSource {
    /// The underlying moving-average process.
    pub fn process(&self) -> &Arc<ProcessSpec> {
        match self {
            BatchSource::Process(s) => s,
            BatchSource::Blocked { parent, .. } => parent,
        }
    }

    /// Dependence order of the stored sequence.
    pub fn dependence(&self) -> usize {
        match self {
            BatchSource::Process(s) => s.m(),
            BatchSource::Blocked { parent, block, .. } => parent.m().div_ceil(*block),
        }
    }

    pub fn block(&self) -> usize {
        match self {
            BatchSource::Process(_) => 0,
            BatchSource::Blocked { block, .. } => *block,
        }
    }
}

/// `R` independent replicates of a length-`n` sequence of `p`-vectors,
/// stored replicate-major (`data[(r*n + t)*p + k]`).
#[derive(Debug, Clone)]
pub struct SampleBatch {
    data: Vec<f64>,
    prefix: Vec<f64>,
    replicates: usize,
    n: usize,
    p: usize,
    source: BatchSource,
    master_seed: u64,
}

impl SampleBatch {
    pub fn new(
        data: Vec<f64>,
        replicates: usize,
        n: usize,
        p: usize,
        source: BatchSource,
        master_seed: u64,
    ) -> Result<Self> {
        if replicates == 0 || n == 0 || p == 0 {
            return Err(Error::Shape("batch needs R, n, p >= 1".into()));
        }
        if data.len() != replicates * n * p {
            return Err(Error::Shape(format!(
                "data has {} values, expected R*n*p = {}*{}*{}",
                data.len(),
                replicates,
                n,
                p
            )));
        }
        if p != source.process().p() {
            return Err(Error::Shape("batch dimension differs from its process".into()));
        }
        let mut prefix = vec![0.0; replicates * (n + 1) * p];
        prefix
            .par_chunks_mut((n + 1) * p)
            .zip(data.par_chunks(n * p))
            .for_each(|(pre, rep)| {
                let mut acc = vec![NeumaierSum::default(); p];
                for (t, row) in rep.chunks_exact(p).enumerate() {
                    let dst = &mut pre[(t + 1) * p..(t + 2) * p];
                    for ((a, v), d) in acc.iter_mut().zip(row).zip(dst) {
                        a.add(*v);
                        *d = a.value();
                    }
                }
            });
        Ok(Self { data, prefix, replicates, n, p, source, master_seed })
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn source(&self) -> &BatchSource {
        &self.source
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Path of replicate `r` (time-major `n x p`).
    pub fn replicate(&self, r: usize) -> &[f64] {
        &self.data[r * self.n * self.p..(r + 1) * self.n * self.p]
    }

    /// `X_i` of replicate `r`, 1-based.
    pub fn x(&self, r: usize, i: usize) -> &[f64] {
        let off = (r * self.n + i - 1) * self.p;
        &self.data[off..off + self.p]
    }

    /// `S X_{[i,j]}` for every replicate, as an `R x p` array. O(p) per
    /// replicate via the prefix table.
    pub fn prefix_sum(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        if i == 0 || j < i || j > self.n {
            return Err(Error::Range(format!("interval [{i}, {j}] outside [1, {}]", self.n)));
        }
        let (n, p) = (self.n, self.p);
        let mut out = Vec::with_capacity(self.replicates * p);
        for pre in self.prefix.chunks_exact((n + 1) * p) {
            let hi = &pre[j * p..(j + 1) * p];
            if i == 1 {
                out.extend_from_slice(hi);
            } else {
                let lo = &pre[(i - 1) * p..i * p];
                out.extend(hi.iter().zip(lo).map(|(a, b)| a - b));
            }
        }
        Ok(out)
    }
}
