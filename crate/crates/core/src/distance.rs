//! Monte Carlo estimators of the rectangle Kolmogorov-Smirnov distance `mu`
//! and of the anti-concentration level `kappa(delta)`.
//!
//! The supremum over all corners `r` is replaced by a maximum over a finite
//! [`RectangleFamily`], so both estimators are lower bounds of the
//! corresponding suprema (up to Monte Carlo noise).
//!
//! Samples are flat `R x p` arrays.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rect::in_band;
use crate::rng::{self, Domain};

/// Largest product grid built before falling back to random corners.
pub const MAX_GRID: usize = 1_000_000;

/// Rectangle family configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    /// Quantile levels per coordinate; level `k` is `k / (G + 1)`.
    pub grid_levels: usize,
    /// Random corners used when `G^p` exceeds [`MAX_GRID`].
    pub random_corners: usize,
    /// Include the diagonal corners `t * 1`.
    pub diagonal: bool,
    pub diagonal_levels: usize,
    pub seed: u64,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self { grid_levels: 64, random_corners: 4096, diagonal: true, diagonal_levels: 512, seed: 0 }
    }
}

impl FamilyConfig {
    /// Defaults scaled to the dimension: fine grids in low dimension, random
    /// corners otherwise.
    pub fn for_dim(p: usize) -> Self {
        let grid_levels = match p {
            1 => 2048,
            2 => 128,
            3 => 24,
            4 => 12,
            _ => 8,
        };
        Self { grid_levels, ..Self::default() }
    }
}

/// A finite set of corners.
#[derive(Debug, Clone, PartialEq)]
pub struct RectangleFamily {
    p: usize,
    corners: Vec<f64>,
    grid_size: usize,
    random_size: usize,
    diagonal_size: usize,
}

impl RectangleFamily {
    pub fn from_corners(p: usize, corners: Vec<f64>) -> Result<Self> {
        if p == 0 || corners.len() % p != 0 {
            return Err(Error::Shape("corner array length must be a multiple of p".into()));
        }
        let n = corners.len() / p;
        Ok(Self { p, corners, grid_size: 0, random_size: n, diagonal_size: 0 })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.corners.len() / self.p
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    pub fn corner(&self, i: usize) -> &[f64] {
        &self.corners[i * self.p..(i + 1) * self.p]
    }

    pub fn corners(&self) -> impl Iterator<Item = &[f64]> {
        self.corners.chunks_exact(self.p)
    }

    /// (grid, random, diagonal) corner counts.
    pub fn composition(&self) -> (usize, usize, usize) {
        (self.grid_size, self.random_size, self.diagonal_size)
    }

    /// First `len` corners as a family of their own.
    pub fn truncated(&self, len: usize) -> Self {
        let len = len.min(self.len());
        Self {
            p: self.p,
            corners: self.corners[..len * self.p].to_vec(),
            grid_size: self.grid_size.min(len),
            random_size: len.saturating_sub(self.grid_size).min(self.random_size),
            diagonal_size: len.saturating_sub(self.grid_size + self.random_size),
        }
    }
}

fn sorted_column(samples: &[&[f64]], p: usize, k: usize) -> Vec<f64> {
    let mut col: Vec<f64> = samples.iter().flat_map(|s| s.iter().skip(k).step_by(p).copied()).collect();
    col.sort_by(f64::total_cmp);
    col
}

/// Empirical quantile (inverse ECDF) of sorted data at level `q` in (0, 1].
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
    sorted[idx]
}

/// Build a family from pooled samples.
///
/// Corners are (a) the product grid of pooled per-coordinate quantiles at
/// levels `k/(G+1)`, `k = 1..G`, when `G^p <= 10^6`, otherwise (b)
/// `random_corners` corners whose coordinates are drawn independently from
/// the pooled marginals, followed by (c) the diagonal corners `t * 1` with
/// `t` at `diagonal_levels` quantiles of the pooled coordinate maxima.
pub fn build_rectangle_family(x: &[f64], y: &[f64], p: usize, cfg: &FamilyConfig) -> Result<RectangleFamily> {
    if p == 0 || x.len() % p != 0 || y.len() % p != 0 {
        return Err(Error::Shape("sample arrays must be R x p".into()));
    }
    if x.is_empty() && y.is_empty() {
        return Err(Error::Input("no samples to build a family from".into()));
    }
    let pooled = [x, y];
    let cols: Vec<Vec<f64>> = (0..p).map(|k| sorted_column(&pooled, p, k)).collect();
    let mut corners = Vec::new();
    let g = cfg.grid_levels;

    let grid_fits = g > 0 && (g as f64).powi(p as i32) <= MAX_GRID as f64;
    let (mut grid_size, mut random_size) = (0, 0);
    if grid_fits {
        let levels: Vec<Vec<f64>> = cols
            .iter()
            .map(|c| (1..=g).map(|k| quantile(c, k as f64 / (g + 1) as f64)).collect())
            .collect();
        grid_size = g.pow(p as u32);
        corners.reserve(grid_size * p);
        let mut idx = vec![0usize; p];
        for _ in 0..grid_size {
            corners.extend(idx.iter().enumerate().map(|(k, &i)| levels[k][i]));
            // odometer, last coordinate fastest
            for k in (0..p).rev() {
                idx[k] += 1;
                if idx[k] < g {
                    break;
                }
                idx[k] = 0;
            }
        }
    } else if cfg.random_corners > 0 {
        random_size = cfg.random_corners;
        let mut rng = rng::stream(cfg.seed, Domain::Family, 0);
        corners.reserve(random_size * p);
        for _ in 0..random_size {
            for c in &cols {
                corners.push(c[rng.random_range(0..c.len())]);
            }
        }
    }

    let mut diagonal_size = 0;
    if cfg.diagonal && cfg.diagonal_levels > 0 {
        let mut maxima: Vec<f64> = pooled
            .iter()
            .flat_map(|s| s.chunks_exact(p).map(|v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
            .collect();
        maxima.sort_by(f64::total_cmp);
        let d = cfg.diagonal_levels;
        diagonal_size = d;
        for k in 1..=d {
            let t = quantile(&maxima, k as f64 / (d + 1) as f64);
            corners.extend(std::iter::repeat_n(t, p));
        }
    }

    if corners.is_empty() {
        return Err(Error::Input("family configuration produced no corners".into()));
    }
    Ok(RectangleFamily { p, corners, grid_size, random_size, diagonal_size })
}

/// Which supremum a [`DistanceEstimate`] approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    Mu,
    Kappa,
}

/// An estimated `mu` or `kappa` with its Monte Carlo standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub kind: DistanceKind,
    pub value: f64,
    pub stderr: f64,
    pub n_rect: usize,
    pub r_x: usize,
    pub r_y: usize,
    /// Index of the maximizing corner in the family.
    pub argmax: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap_stderr: Option<f64>,
}

/// Samples sorted by their first coordinate, so that the candidates for
/// `x ⪯ r` form a prefix found by binary search.
#[derive(Debug, Clone)]
pub struct SortedSamples {
    p: usize,
    rows: Vec<f64>,
    first: Vec<f64>,
}

impl SortedSamples {
    pub fn new(samples: &[f64], p: usize) -> Self {
        let mut idx: Vec<usize> = (0..samples.len() / p).collect();
        idx.sort_by(|&a, &b| samples[a * p].total_cmp(&samples[b * p]));
        let mut rows = Vec::with_capacity(samples.len());
        for i in &idx {
            rows.extend_from_slice(&samples[i * p..(i + 1) * p]);
        }
        let first = idx.iter().map(|&i| samples[i * p]).collect();
        Self { p, rows, first }
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    /// Rows whose first coordinate is `<= bound`.
    fn prefix(&self, bound: f64) -> usize {
        self.first.partition_point(|&v| v <= bound)
    }

    /// `#{x : x ⪯ r}`.
    pub fn count_below(&self, r: &[f64]) -> usize {
        let end = self.prefix(r[0]);
        if self.p == 1 {
            return end;
        }
        self.rows[..end * self.p]
            .chunks_exact(self.p)
            .filter(|x| x[1..].iter().zip(&r[1..]).all(|(a, b)| a <= b))
            .count()
    }

    /// `#{x : x in A_{r,delta}}`.
    pub fn count_band(&self, r: &[f64], delta: f64) -> usize {
        let end = self.prefix(r[0] + delta);
        self.rows[..end * self.p]
            .chunks_exact(self.p)
            .filter(|x| in_band(x, r, delta))
            .count()
    }
}

fn check_samples(s: &[f64], p: usize, name: &str) -> Result<usize> {
    if s.is_empty() || s.len() % p != 0 {
        return Err(Error::Shape(format!("{name} must be a non-empty R x {p} array")));
    }
    Ok(s.len() / p)
}

/// Worst-case binomial standard error of one empirical CDF value.
pub fn binomial_stderr(replicates: usize) -> f64 {
    0.5 / (replicates as f64).sqrt()
}

fn max_with_index(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
}

/// Per-corner `|F_X(r) - F_Y(r)|` over the family.
pub fn cdf_differences(x: &SortedSamples, y: &SortedSamples, family: &RectangleFamily) -> Vec<f64> {
    let (rx, ry) = (x.len() as f64, y.len() as f64);
    (0..family.len())
        .into_par_iter()
        .map(|i| {
            let r = family.corner(i);
            let fx = x.count_below(r) as f64 / rx;
            let fy = y.count_below(r) as f64 / ry;
            (fx - fy).abs()
        })
        .collect()
}

/// `max_r |F_X(r) - F_Y(r)|` over a family of corners.
pub fn estimate_mu(x: &[f64], y: &[f64], family: &RectangleFamily) -> Result<DistanceEstimate> {
    let p = family.p();
    let r_x = check_samples(x, p, "samples X")?;
    let r_y = check_samples(y, p, "samples Y")?;
    let diffs = cdf_differences(&SortedSamples::new(x, p), &SortedSamples::new(y, p), family);
    let (argmax, value) = max_with_index(&diffs);
    Ok(DistanceEstimate {
        kind: DistanceKind::Mu,
        value,
        stderr: (binomial_stderr(r_x).powi(2) + binomial_stderr(r_y).powi(2)).sqrt(),
        n_rect: family.len(),
        r_x,
        r_y,
        argmax,
        bootstrap_stderr: None,
    })
}

/// Default number of bootstrap resamples.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// [`estimate_mu`] plus a bootstrap standard error from resampling both
/// sample sets with replacement.
pub fn estimate_mu_bootstrap(
    x: &[f64],
    y: &[f64],
    family: &RectangleFamily,
    resamples: usize,
    seed: u64,
) -> Result<DistanceEstimate> {
    let mut est = estimate_mu(x, y, family)?;
    let p = family.p();
    let draw = |s: &[f64], rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        let n = s.len() / p;
        let mut out = Vec::with_capacity(s.len());
        for _ in 0..n {
            let i = rng.random_range(0..n);
            out.extend_from_slice(&s[i * p..(i + 1) * p]);
        }
        out
    };
    let values: Vec<f64> = (0..resamples)
        .map(|b| {
            let mut rng = rng::stream(seed, Domain::Bootstrap, b as u64);
            let bx = draw(x, &mut rng);
            let by = draw(y, &mut rng);
            let d = cdf_differences(&SortedSamples::new(&bx, p), &SortedSamples::new(&by, p), family);
            max_with_index(&d).1
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() as f64 - 1.0).max(1.0);
    est.bootstrap_stderr = Some(var.sqrt());
    Ok(est)
}

/// Per-corner band frequencies.
pub fn band_frequencies(samples: &SortedSamples, delta: f64, family: &RectangleFamily) -> Vec<f64> {
    let r = samples.len() as f64;
    (0..family.len())
        .into_par_iter()
        .map(|i| samples.count_band(family.corner(i), delta) as f64 / r)
        .collect()
}

/// `max_r P[x in A_{r,delta}]` over a family of corners.
pub fn estimate_kappa(samples: &[f64], delta: f64, family: &RectangleFamily) -> Result<DistanceEstimate> {
    if !(delta >= 0.0) {
        return Err(Error::Parameter(format!("delta must be >= 0, got {delta}")));
    }
    let p = family.p();
    let r_x = check_samples(samples, p, "samples")?;
    let freqs = band_frequencies(&SortedSamples::new(samples, p), delta, family);
    let (argmax, value) = max_with_index(&freqs);
    Ok(DistanceEstimate {
        kind: DistanceKind::Kappa,
        value,
        stderr: binomial_stderr(r_x),
        n_rect: family.len(),
        r_x,
        r_y: 0,
        argmax,
        bootstrap_stderr: None,
    })
}
