//! Config-driven runs behind the command-line subcommands.
//!
//! Each runner returns plain serializable rows; [`crate::output`] renders
//! them. Randomness is drawn from streams derived from the config seed, so a
//! run is a pure function of its config.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::audit::{audit_induction_lemmas, AuditReport, AuditSettings};
use crate::batch::{RemainderPolicy, SampleBatch};
use crate::blocking::{block_path, block_ranges, block_reduce_with, verify_m_dependence, DependenceCheck};
use crate::bounds::{corollary_bound, epsilon_star, theorem_bound};
use crate::config::Config;
use crate::distance::{
    build_rectangle_family, estimate_kappa, estimate_mu, estimate_mu_bootstrap, DistanceKind, FamilyConfig,
};
use crate::error::{Error, Result};
use crate::gaussian::sample_sum_gaussian;
use crate::params::{estimate_nu, extract_params, extract_sigmas, MomentParams};
use crate::persist::read_batch;
use crate::procgen::{map_paths_width, sample_paths, sample_sums, sum_rows, ProcessSpec};
use crate::rng::{child_seed, stream, Domain};

// labels for child seeds
const SEED_GAUSS: u64 = 1;
const SEED_GAUSS_BLOCKED: u64 = 2;
const SEED_FAMILY: u64 = 3;
const SEED_MOMENTS: u64 = 4;
const SEED_CHECK: u64 = 5;
const SEED_BOOT: u64 = 6;

/// Seed of grid point `n`, kept apart from the small child labels above.
pub fn point_seed(master: u64, n: usize) -> u64 {
    child_seed(master, (1 << 32) + n as u64)
}

/// Family config whose random corners are tied to `point_seed`.
pub fn seeded_family(cfg: &FamilyConfig, point_seed: u64) -> FamilyConfig {
    FamilyConfig { seed: child_seed(child_seed(point_seed, SEED_FAMILY), cfg.seed), ..cfg.clone() }
}

/// `max(m, 1)`: the dependence order declared for a process in bounds.
pub fn declared_m(spec: &ProcessSpec) -> usize {
    spec.m().max(1)
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg.into()))
    }
}

// ---------------------------------------------------------------------------
// log-log slope

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopePoint {
    pub n_eff: f64,
    pub mu_hat: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub used: Vec<SlopePoint>,
    /// Points with `mu_hat <= 2 stderr`.
    pub excluded: Vec<SlopePoint>,
}

/// Least squares of `ln mu_hat` on `ln n_eff`, skipping points that are
/// indistinguishable from zero.
pub fn fit_loglog_slope(points: &[SlopePoint]) -> Result<SlopeFit> {
    if points.iter().any(|q| !(q.n_eff > 0.0)) {
        return Err(Error::Input("n_eff must be positive".into()));
    }
    let (used, excluded): (Vec<SlopePoint>, Vec<SlopePoint>) =
        points.iter().partition(|q| q.mu_hat > 2.0 * q.stderr && q.mu_hat > 0.0);
    if used.len() < 3 {
        return Err(Error::InsufficientData { usable: used.len() });
    }
    let k = used.len() as f64;
    let xs: Vec<f64> = used.iter().map(|q| q.n_eff.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|q| q.mu_hat.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Numeric("all usable points share one n_eff".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(SlopeFit { slope, intercept, r2, used, excluded })
}

// ---------------------------------------------------------------------------
// rate experiment

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub variant: String,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub n_eff: f64,
    pub n_blocks: usize,
    pub mu_hat: f64,
    pub stderr: f64,
    pub bound: f64,
    pub c: f64,
    pub seed: u64,
    pub point_seed: u64,
    pub r_x: usize,
    pub r_y: usize,
    pub n_rect: usize,
}

/// Direct and blocked estimates at one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayPoint {
    pub n: usize,
    pub n_eff: f64,
    pub mu_direct: f64,
    pub mu_blocked: f64,
    pub diff: f64,
    /// Three combined standard errors.
    pub tolerance: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantFit {
    pub variant: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<SlopeFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub rows: Vec<RateRow>,
    pub fits: Vec<VariantFit>,
    pub overlay: Vec<OverlayPoint>,
    pub nu1: f64,
    pub nu3: f64,
}

impl RateResult {
    pub fn fit(&self, variant: &str) -> Option<&SlopeFit> {
        self.fits.iter().find(|f| f.variant == variant).and_then(|f| f.fit.as_ref())
    }

    pub fn points(&self, variant: &str) -> Vec<SlopePoint> {
        self.rows
            .iter()
            .filter(|r| r.variant == variant)
            .map(|r| SlopePoint { n_eff: r.n_eff, mu_hat: r.mu_hat, stderr: r.stderr })
            .collect()
    }
}

/// Empirical `mu_hat` against `n_eff` over the configured grid of `n`.
///
/// For every `n` the sums `S X_[1,n]` are compared with Gaussian sums of the
/// same covariance. With `block_m = b` the same paths are also averaged in
/// blocks of `b` and the blocked sums compared with their own Gaussian analog.
pub fn run_rate_experiment(cfg: &Config, force: bool) -> Result<RateResult> {
    let rc = &cfg.rate;
    require(!rc.ns.is_empty(), "rate.ns is empty")?;
    require(rc.ns.iter().all(|&n| n >= 1), "rate.ns entries must be at least 1")?;
    require(rc.replicates_x > 0 && rc.replicates_y > 0, "rate replicates must be positive")?;
    require(rc.block_m != Some(0), "rate.block_m must be at least 1")?;
    let spec = cfg.process_spec()?;
    if spec.innovation().is_gaussian() && !force {
        return Err(Error::Config(
            "Gaussian innovations make the sum exactly Gaussian, so mu is identically zero; use --force to run anyway"
                .into(),
        ));
    }
    let p = spec.p();
    let m = declared_m(&spec);
    let fam = cfg.family_for(p);
    let nu = estimate_nu(&spec, rc.n_mc, child_seed(cfg.seed, SEED_MOMENTS))?;

    let mut rows = Vec::new();
    let mut overlay = Vec::new();
    for &n in &rc.ns {
        let point_seed = point_seed(cfg.seed, n);
        let blocking = match rc.block_m {
            Some(b) => Some((b, block_ranges(n, b, RemainderPolicy::Absorb)?)),
            None => None,
        };
        let width = if blocking.is_some() { 2 * p } else { p };
        let sums = map_paths_width(&spec, n, rc.replicates_x, point_seed, width, |path, out| {
            sum_rows(path, p, &mut out[..p]);
            if let Some((b, ranges)) = &blocking {
                let mut blocked = vec![0.0; ranges.len() * p];
                block_path(path, p, ranges, *b, &mut blocked);
                sum_rows(&blocked, p, &mut out[p..]);
            }
        })?;
        let column = |offset: usize| -> Vec<f64> {
            sums.chunks_exact(width).flat_map(|c| c[offset..offset + p].iter().copied()).collect()
        };
        let cov = spec.covariance().sum_covariance_len(n);

        let x = if blocking.is_some() { column(0) } else { sums.clone() };
        let y = sample_sum_gaussian(&cov, rc.replicates_y, child_seed(point_seed, SEED_GAUSS))?;
        let family = build_rectangle_family(&x, &y, p, &seeded_family(&fam, point_seed))?;
        let est = estimate_mu(&x, &y, &family)?;
        let params = MomentParams::from_parts(extract_sigmas(&spec, n, m)?, &nu, n, m, cfg.seed);
        let direct = RateRow {
            variant: "direct".into(),
            n,
            m,
            p,
            n_eff: n as f64 / m as f64,
            n_blocks: n,
            mu_hat: est.value,
            stderr: est.stderr,
            bound: if n >= m { corollary_bound(&params, n, m, p, rc.c)? } else { f64::NAN },
            c: rc.c,
            seed: cfg.seed,
            point_seed,
            r_x: est.r_x,
            r_y: est.r_y,
            n_rect: est.n_rect,
        };

        if let Some((b, ranges)) = &blocking {
            let b = *b;
            let xb = column(p);
            let covb = &cov * (1.0 / (b * b) as f64);
            let yb = sample_sum_gaussian(&covb, rc.replicates_y, child_seed(point_seed, SEED_GAUSS_BLOCKED))?;
            let family_b = build_rectangle_family(&xb, &yb, p, &seeded_family(&fam, child_seed(point_seed, b as u64)))?;
            let est_b = estimate_mu(&xb, &yb, &family_b)?;
            let params_b = MomentParams::from_parts(extract_sigmas(&spec, n, b)?, &nu, n, b, cfg.seed);
            let blocked = RateRow {
                variant: "blocked".into(),
                n,
                m: b,
                p,
                n_eff: n as f64 / b as f64,
                n_blocks: ranges.len(),
                mu_hat: est_b.value,
                stderr: est_b.stderr,
                bound: corollary_bound(&params_b, n, b, p, rc.c)?,
                c: rc.c,
                seed: cfg.seed,
                point_seed,
                r_x: est_b.r_x,
                r_y: est_b.r_y,
                n_rect: est_b.n_rect,
            };
            let diff = (direct.mu_hat - blocked.mu_hat).abs();
            let tolerance = 3.0 * (direct.stderr.powi(2) + blocked.stderr.powi(2)).sqrt();
            overlay.push(OverlayPoint {
                n,
                n_eff: blocked.n_eff,
                mu_direct: direct.mu_hat,
                mu_blocked: blocked.mu_hat,
                diff,
                tolerance,
                within: diff <= tolerance,
            });
            rows.push(direct);
            rows.push(blocked);
        } else {
            rows.push(direct);
        }
    }

    let mut result = RateResult { rows, fits: Vec::new(), overlay, nu1: nu.nu1, nu3: nu.nu3 };
    let variants: &[&str] = if rc.block_m.is_some() { &["direct", "blocked"] } else { &["direct"] };
    for v in variants {
        let fit = fit_loglog_slope(&result.points(v));
        result.fits.push(VariantFit {
            variant: v.to_string(),
            error: fit.as_ref().err().map(|e| e.to_string()),
            fit: fit.ok(),
        });
    }
    Ok(result)
}

// ---------------------------------------------------------------------------
// smoothing lemma

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingLemmaRow {
    pub eps: f64,
    pub mu: f64,
    pub mu_stderr: f64,
    pub mu_smoothed: f64,
    pub mu_smoothed_stderr: f64,
    /// `C eps log(ep) / sqrt(min_k Sigma_kk)`
    pub slack: f64,
    /// `C mu_smoothed + slack`
    pub rhs: f64,
    /// Three combined standard errors of `mu - C mu_smoothed`.
    pub tolerance: f64,
    pub holds: bool,
}

/// Compare `mu(X, Y)` with `C mu(X + eps Z, Y + eps Z) + C eps log(ep) / sqrt(min var)`
/// over a grid of `eps`, where `Z` is an independent standard Gaussian draw
/// per sample vector.
pub fn smoothing_lemma_check(
    x: &[f64],
    y: &[f64],
    p: usize,
    eps_grid: &[f64],
    c: f64,
    min_var: f64,
    family: &FamilyConfig,
    seed: u64,
) -> Result<Vec<SmoothingLemmaRow>> {
    if !(min_var > 0.0) {
        return Err(Error::DegenerateVariance(format!("minimum variance {min_var}")));
    }
    let base_family = build_rectangle_family(x, y, p, &seeded_family(family, seed))?;
    let base = estimate_mu(x, y, &base_family)?;
    let log_ep = 1.0 + (p as f64).ln();
    let rx = x.len() / p;
    let perturb = |s: &[f64], offset: usize, eps: f64, key: u64| -> Vec<f64> {
        let mut out = s.to_vec();
        for (r, row) in out.chunks_exact_mut(p).enumerate() {
            let mut rng = stream(key, Domain::Smoothing, (offset + r) as u64);
            row.iter_mut().for_each(|v| *v += eps * rng.sample::<f64, _>(StandardNormal));
        }
        out
    };
    eps_grid
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            if !(eps > 0.0) {
                return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
            }
            let key = child_seed(seed, 100 + k as u64);
            let xs = perturb(x, 0, eps, key);
            let ys = perturb(y, rx, eps, key);
            let fam = build_rectangle_family(&xs, &ys, p, &seeded_family(family, key))?;
            let sm = estimate_mu(&xs, &ys, &fam)?;
            let slack = c * eps * log_ep / min_var.sqrt();
            let rhs = c * sm.value + slack;
            let tolerance = 3.0 * (base.stderr.powi(2) + (c * sm.stderr).powi(2)).sqrt();
            Ok(SmoothingLemmaRow {
                eps,
                mu: base.value,
                mu_stderr: base.stderr,
                mu_smoothed: sm.value,
                mu_smoothed_stderr: sm.stderr,
                slack,
                rhs,
                tolerance,
                holds: base.value <= rhs + tolerance,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// subcommand runners

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRow {
    pub k: usize,
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub replicates: usize,
    pub mean: f64,
    pub variance: f64,
    pub expected_variance: f64,
    pub seed: u64,
}

/// Sample a batch and summarize the coordinates of `S X_[1,n]`.
pub fn run_simulate(cfg: &Config) -> Result<(SampleBatch, Vec<SimulateRow>)> {
    let sc = &cfg.simulate;
    require(sc.n > 0 && sc.replicates > 0, "simulate.n and simulate.replicates must be positive")?;
    let spec = Arc::new(cfg.process_spec()?);
    let batch = sample_paths(&spec, sc.n, sc.replicates, cfg.seed)?;
    let sums = batch.prefix_sum(1, sc.n)?;
    let expected = spec.covariance().sum_covariance_len(sc.n);
    let p = spec.p();
    let r = sc.replicates as f64;
    let rows = (0..p)
        .map(|k| {
            let col: Vec<f64> = sums.iter().skip(k).step_by(p).copied().collect();
            let mean = col.iter().sum::<f64>() / r;
            let variance = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0).max(1.0);
            SimulateRow {
                k: k + 1,
                n: sc.n,
                p,
                m: spec.m(),
                replicates: sc.replicates,
                mean,
                variance,
                expected_variance: expected[(k, k)],
                seed: cfg.seed,
            }
        })
        .collect();
    Ok((batch, rows))
}

/// Assumption constants of the configured process.
pub fn run_params(cfg: &Config) -> Result<MomentParams> {
    let pc = &cfg.params;
    require(pc.n > 0, "params.n must be positive")?;
    let spec = cfg.process_spec()?;
    let m = pc.m.unwrap_or_else(|| declared_m(&spec));
    extract_params(&spec, pc.n, m, pc.n_mc, child_seed(cfg.seed, SEED_MOMENTS))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub c: f64,
    pub n_eff: f64,
    pub sigma_min: f64,
    pub sigma_lower: f64,
    pub sigma_upper: f64,
    pub nu1: f64,
    pub nu3: f64,
    pub theorem_bound: f64,
    pub corollary_bound: f64,
    pub epsilon_star: f64,
    pub epsilon_formula: f64,
    pub epsilon_clamped: bool,
    pub params_source: String,
}

/// Bound values from explicit or extracted constants.
pub fn run_bound(cfg: &Config) -> Result<BoundRow> {
    let bc = &cfg.bound;
    require(bc.n > 0 && bc.m > 0, "bound.n and bound.m must be positive")?;
    let (params, p, source) = match &bc.params {
        Some(ex) => {
            let p = match (bc.p, &cfg.process) {
                (Some(p), _) => p,
                (None, Some(repr)) => repr.p,
                (None, None) => return Err(Error::Config("bound.p is required without a [process]".into())),
            };
            (ex.to_moment_params(bc.n, bc.m), p, "explicit")
        }
        None => {
            let spec = cfg.process_spec()?;
            let params = extract_params(&spec, bc.n, bc.m, bc.n_mc, child_seed(cfg.seed, SEED_MOMENTS))?;
            (params, bc.p.unwrap_or(spec.p()), "extracted")
        }
    };
    let eps = epsilon_star(&params, bc.n, p, bc.c)?;
    Ok(BoundRow {
        n: bc.n,
        m: bc.m,
        p,
        c: bc.c,
        n_eff: bc.n as f64 / bc.m as f64,
        sigma_min: params.sigma_min,
        sigma_lower: params.sigma_lower,
        sigma_upper: params.sigma_upper,
        nu1: params.nu1,
        nu3: params.nu3,
        theorem_bound: theorem_bound(&params, bc.n, p, bc.c)?,
        corollary_bound: corollary_bound(&params, bc.n, bc.m, p, bc.c)?,
        epsilon_star: eps.value,
        epsilon_formula: eps.formula,
        epsilon_clamped: eps.clamped,
        params_source: source.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRow {
    pub n_in: usize,
    pub block: usize,
    pub n_blocks: usize,
    pub policy: RemainderPolicy,
    pub p: usize,
    pub replicates: usize,
    pub check_lag: usize,
    pub statistic: f64,
    pub null_p95: f64,
    pub check_stderr: f64,
    pub passed: bool,
}

/// Block a stored (or freshly simulated) batch and check that the result
/// is `check_lag`-dependent.
pub fn run_block(cfg: &Config, base: &Path) -> Result<(SampleBatch, BlockRow)> {
    let bk = &cfg.block;
    require(bk.m > 0, "block.m must be positive")?;
    let batch = match &bk.input {
        Some(path) => read_batch(&base.join(path))?,
        None => run_simulate(cfg)?.0,
    };
    let blocked = block_reduce_with(&batch, bk.m, bk.policy)?;
    let DependenceCheck { statistic, null_p95, stderr, passed, .. } =
        verify_m_dependence(&blocked, bk.check_lag, child_seed(cfg.seed, SEED_CHECK))?;
    let row = BlockRow {
        n_in: batch.n(),
        block: bk.m,
        n_blocks: blocked.n(),
        policy: bk.policy,
        p: blocked.p(),
        replicates: blocked.replicates(),
        check_lag: bk.check_lag,
        statistic,
        null_p95,
        check_stderr: stderr,
        passed,
    };
    Ok((blocked, row))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub kind: DistanceKind,
    /// `xy` for `mu`, `x` or `y` for the sample set of a `kappa` estimate.
    pub sample: String,
    pub delta: Option<f64>,
    pub value: f64,
    pub stderr: f64,
    pub bootstrap_stderr: Option<f64>,
    pub n: usize,
    pub n_rect: usize,
    pub r_x: usize,
    pub r_y: usize,
    pub seed: u64,
    pub family: String,
}

/// `mu_hat` between `S X_[1,n]` and its Gaussian analog, plus `kappa_hat(delta)` of both.
pub fn run_estimate(cfg: &Config) -> Result<Vec<EstimateRow>> {
    let ec = &cfg.estimate;
    require(ec.n > 0, "estimate.n must be positive")?;
    require(ec.replicates_x > 0 && ec.replicates_y > 0, "estimate replicates must be positive")?;
    let spec = cfg.process_spec()?;
    let p = spec.p();
    let x = sample_sums(&spec, ec.n, ec.replicates_x, cfg.seed)?;
    let y = sample_sum_gaussian(&spec.covariance().sum_covariance_len(ec.n), ec.replicates_y, child_seed(cfg.seed, SEED_GAUSS))?;
    let fam = seeded_family(&cfg.family_for(p), cfg.seed);
    let family_json = serde_json::to_string(&fam)?;
    let family = build_rectangle_family(&x, &y, p, &fam)?;
    let mu = if ec.bootstrap > 0 {
        estimate_mu_bootstrap(&x, &y, &family, ec.bootstrap, child_seed(cfg.seed, SEED_BOOT))?
    } else {
        estimate_mu(&x, &y, &family)?
    };
    let mut rows = vec![EstimateRow {
        kind: mu.kind,
        sample: "xy".into(),
        delta: None,
        value: mu.value,
        stderr: mu.stderr,
        bootstrap_stderr: mu.bootstrap_stderr,
        n: ec.n,
        n_rect: mu.n_rect,
        r_x: mu.r_x,
        r_y: mu.r_y,
        seed: cfg.seed,
        family: family_json.clone(),
    }];
    for &delta in &ec.deltas {
        for (name, s) in [("x", &x), ("y", &y)] {
            let k = estimate_kappa(s, delta, &family)?;
            rows.push(EstimateRow {
                kind: k.kind,
                sample: name.into(),
                delta: Some(delta),
                value: k.value,
                stderr: k.stderr,
                bootstrap_stderr: None,
                n: ec.n,
                n_rect: k.n_rect,
                r_x: k.r_x,
                r_y: 0,
                seed: cfg.seed,
                family: family_json.clone(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuPoint {
    pub i: usize,
    pub mu_hat: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditOutcome {
    pub params: MomentParams,
    pub mu: Vec<MuPoint>,
    pub report: AuditReport,
}

/// Estimate `mu_i` on the grid and `kappa_i(delta)` on demand from one
/// batch of paths, then run the lemma audit.
pub fn run_audit(cfg: &Config) -> Result<AuditOutcome> {
    let ac = &cfg.audit;
    require(ac.n > 0 && ac.replicates > 0, "audit.n and audit.replicates must be positive")?;
    let spec = Arc::new(cfg.process_spec()?);
    let p = spec.p();
    let n = ac.n;
    let grid: Vec<usize> = ac.grid.clone().unwrap_or_else(|| (1..=n).collect());
    if grid.iter().any(|&i| i == 0 || i > n) {
        return Err(Error::Config(format!("audit.grid entries must lie in [1, {n}]")));
    }
    let params = extract_params(&spec, n, declared_m(&spec), ac.n_mc, child_seed(cfg.seed, SEED_MOMENTS))?;
    let batch = sample_paths(&spec, n, ac.replicates, cfg.seed)?;
    let fam = cfg.family_for(p);

    let mut mu = Vec::with_capacity(grid.len());
    for &i in &grid {
        let seed_i = point_seed(cfg.seed, i);
        let x = batch.prefix_sum(1, i)?;
        let y = sample_sum_gaussian(&spec.covariance().sum_covariance_len(i), ac.replicates, child_seed(seed_i, SEED_GAUSS))?;
        let family = build_rectangle_family(&x, &y, p, &seeded_family(&fam, seed_i))?;
        let est = estimate_mu(&x, &y, &family)?;
        mu.push(MuPoint { i, mu_hat: est.value, stderr: est.stderr });
    }
    let mu_map: BTreeMap<usize, f64> = mu.iter().map(|q| (q.i, q.mu_hat)).collect();
    let kappa = |i: usize, delta: f64| -> Option<f64> {
        if i == 0 || i > n {
            return None;
        }
        let x = batch.prefix_sum(1, i).ok()?;
        let family = build_rectangle_family(&x, &[], p, &seeded_family(&fam, point_seed(cfg.seed, i))).ok()?;
        estimate_kappa(&x, delta, &family).ok().map(|k| k.value)
    };
    let settings =
        AuditSettings { n, p, delta: ac.delta, eps: ac.eps, delta_const: ac.delta_const, c: ac.c };
    let report = audit_induction_lemmas(&grid, &mu_map, &kappa, &params, &settings)?;
    Ok(AuditOutcome { params, mu, report })
}

/// `R x p` independent standard Gaussian draws.
pub fn standard_gaussian(p: usize, replicates: usize, seed: u64) -> Vec<f64> {
    let mut out = vec![0.0; replicates * p];
    for (r, row) in out.chunks_exact_mut(p).enumerate() {
        let mut rng = stream(seed, Domain::Gaussian, r as u64);
        row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(f: impl Fn(f64) -> f64) -> Vec<SlopePoint> {
        [64.0, 128.0, 256.0, 512.0, 1024.0]
            .iter()
            .map(|&n| SlopePoint { n_eff: n, mu_hat: f(n), stderr: 0.0 })
            .collect()
    }

    #[test]
    fn exact_power_laws() {
        let a = fit_loglog_slope(&pts(|n| n.powf(-0.5))).unwrap();
        assert!((a.slope + 0.5).abs() < 1e-12);
        assert!((a.r2 - 1.0).abs() < 1e-12);
        let b = fit_loglog_slope(&pts(|n| 3.0 / n)).unwrap();
        assert!((b.slope + 1.0).abs() < 1e-12);
        assert!((b.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn noisy_points_excluded() {
        let mut p = pts(|n| n.powf(-0.5));
        p[3].stderr = p[3].mu_hat;
        p[4].stderr = p[4].mu_hat / 2.0;
        let f = fit_loglog_slope(&p).unwrap();
        assert_eq!(f.used.len(), 3);
        assert_eq!(f.excluded.len(), 2);
        p[2].mu_hat = 0.0;
        assert!(matches!(fit_loglog_slope(&p), Err(Error::InsufficientData { usable: 2 })));
    }

    fn cfg(toml: &str) -> Config {
        Config::from_toml(toml).unwrap()
    }

    const RADEMACHER: &str = "seed = 3\n[process]\np = 1\nm = 0\ncoeffs = [[[1.0]]]\ninnovation = { law = \"rademacher\" }\n";
    const GAUSS: &str = "[process]\np = 1\nm = 0\ncoeffs = [[[1.0]]]\ninnovation = { law = \"standard-gaussian\" }\n";

    #[test]
    fn rate_validation() {
        let mut c = cfg(RADEMACHER);
        c.rate.replicates_x = 0;
        assert!(matches!(run_rate_experiment(&c, false), Err(Error::Config(_))));
        let mut g = cfg(GAUSS);
        g.rate.ns = vec![4, 8, 16];
        g.rate.replicates_x = 200;
        g.rate.replicates_y = 200;
        g.rate.n_mc = 1000;
        assert!(matches!(run_rate_experiment(&g, false), Err(Error::Config(_))));
        assert_eq!(run_rate_experiment(&g, true).unwrap().rows.len(), 3);
    }

    #[test]
    fn small_rate_run_with_blocking() {
        let mut c = cfg(RADEMACHER);
        c.rate.ns = vec![8, 16, 32];
        c.rate.replicates_x = 2000;
        c.rate.replicates_y = 2000;
        c.rate.n_mc = 1000;
        c.rate.block_m = Some(2);
        let r = run_rate_experiment(&c, false).unwrap();
        assert_eq!(r.rows.len(), 6);
        assert_eq!(r.overlay.len(), 3);
        assert_eq!(r.rows[1].n_blocks, 3);
        assert_eq!(r.rows[0].n_eff, 8.0);
        assert_eq!(r.rows[1].n_eff, 4.0);
        assert!(r.rows.iter().all(|row| row.bound > 0.0));
        assert_eq!(run_rate_experiment(&c, false).unwrap(), r);
    }

    #[test]
    fn bound_from_explicit_params() {
        let c = cfg("[bound]\nn = 1\nm = 1\np = 1\n[bound.params]\nsigma_min = 1.0\nsigma_lower = 1.0\nsigma_upper = 1.0\nnu1 = 1.0\nnu3 = 1.0\n");
        let row = run_bound(&c).unwrap();
        assert!((row.theorem_bound - 2.0).abs() < 1e-12);
        assert!((row.corollary_bound - 2.0).abs() < 1e-12);
        assert!((row.epsilon_star - 2.0).abs() < 1e-12);
    }

    #[test]
    fn audit_empty_grid_is_incomplete() {
        let mut c = cfg(RADEMACHER);
        c.audit.n = 8;
        c.audit.replicates = 200;
        c.audit.n_mc = 1000;
        c.audit.grid = Some(vec![]);
        assert!(matches!(run_audit(&c), Err(Error::IncompleteAudit(_))));
    }

    #[test]
    fn smoothing_lemma_rows() {
        let x = standard_gaussian(1, 2000, 1);
        let y = standard_gaussian(1, 2000, 2);
        let rows = smoothing_lemma_check(&x, &y, 1, &[0.1, 1.0], 2.0, 1.0, &FamilyConfig::for_dim(1), 9).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.holds));
        assert!((rows[1].slack - 2.0).abs() < 1e-12);
    }
}
