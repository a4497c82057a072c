//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! ```bash
//! cargo test --release --test acceptance
//! ```

use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use mdep_clt::batch::RemainderPolicy;
use mdep_clt::blocking::{block_reduce, blocked_params, BlockedCovariance};
use mdep_clt::bounds::{corollary_bound, epsilon_star, theorem_bound};
use mdep_clt::config::Config;
use mdep_clt::distance::{build_rectangle_family, estimate_kappa, estimate_mu, FamilyConfig};
use mdep_clt::experiment::{run_rate_experiment, smoothing_lemma_check, standard_gaussian};
use mdep_clt::gaussian::{nazarov_bound, phi_smoothed, sample_sum_gaussian};
use mdep_clt::normal;
use mdep_clt::params::{extract_params, CovarianceSequence, MomentParams};
use mdep_clt::procgen::{make_ma_process, sample_paths, sample_sums, sum_covariance, Innovation, ProcessSpec};
use mdep_clt::rect::in_band;
use mdep_clt::rng::{stream, Domain};
use mdep_clt::smoothing::{grad_f_l1, smoothing_f, KINK_GUARD};
use nalgebra::DMatrix;
use rand::Rng;

/// `sup_r |Phi(r) - Phi(r/2)|`, maximized independently before the build.
const SHIFTED_VARIANCE_ORACLE: f64 = 0.161_337_284_417_358_84;
const THEOREM_N10_P5: f64 = 17.589_642_131_611_413;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn e2s(e: mdep_clt::Error) -> String {
    e.to_string()
}

fn coeffs(p: usize, m: usize, seed: u64) -> Vec<DMatrix<f64>> {
    let mut rng = stream(seed, Domain::Process, 999);
    (0..=m)
        .map(|a| {
            DMatrix::from_fn(p, p, |i, j| {
                let base: f64 = rng.random_range(-0.5..0.5);
                if a == 0 && i == j {
                    1.0 + base.abs()
                } else {
                    base / (a + 1) as f64
                }
            })
        })
        .collect()
}

fn ma(p: usize, m: usize, seed: u64) -> ProcessSpec {
    make_ma_process(p, m, coeffs(p, m, seed), Innovation::Rademacher).unwrap()
}

fn criterion_1() -> Check {
    // interval sum covariance against brute-force double sums
    let spec = ma(3, 3, 1);
    let mut worst = 0.0f64;
    for (i, j) in [(1, 1), (2, 5), (3, 11), (1, 40), (7, 8)] {
        let fast = sum_covariance(&spec, i, j).map_err(e2s)?;
        let mut brute = DMatrix::zeros(3, 3);
        for a in i..=j {
            for b in i..=j {
                brute += spec.covariance().lag(b as isize - a as isize);
            }
        }
        worst = worst.max((&fast - &brute).amax() / brute.amax());
    }
    ensure(worst <= 1e-10, format!("sum_covariance relative error {worst:e}"))?;

    // blocking sum identity
    let arc = Arc::new(spec.clone());
    let batch = sample_paths(&arc, 37, 200, 3).map_err(e2s)?;
    let blocked = block_reduce(&batch, 3).map_err(e2s)?;
    let s = batch.prefix_sum(1, 37).map_err(e2s)?;
    let sb = blocked.prefix_sum(1, blocked.n()).map_err(e2s)?;
    let rel = s
        .iter()
        .zip(&sb)
        .map(|(a, b)| (a - 3.0 * b).abs() / a.abs().max((3.0 * b).abs()).max(1.0))
        .fold(0.0, f64::max);
    ensure(rel <= 1e-12, format!("blocking sum identity error {rel:e}"))?;

    // blocked lag-2 covariance
    let bc = BlockedCovariance::new(spec.covariance(), 40, 3, RemainderPolicy::Absorb).map_err(e2s)?;
    let lag2 = (1..=bc.len() - 2).map(|a| bc.cross_cov(a, a + 2).amax()).fold(0.0, f64::max);
    ensure(lag2 <= 1e-12, format!("blocked lag-2 covariance {lag2:e}"))?;

    // Gaussian smoothing of the rectangle indicator against Monte Carlo
    let reps = 100_000;
    let z = standard_gaussian(3, reps, 11);
    for (x, r, eps) in [([0.1, -0.3, 0.5], [0.0, 0.0, 0.0], 0.5), ([1.0, 0.2, -0.4], [0.8, 1.5, 0.0], 0.3)] {
        let exact = phi_smoothed(&x, &r, eps).map_err(e2s)?;
        let hits = z
            .chunks_exact(3)
            .filter(|g| (0..3).all(|k| x[k] + eps * g[k] <= r[k]))
            .count() as f64
            / reps as f64;
        let se = (exact * (1.0 - exact) / reps as f64).sqrt();
        ensure((hits - exact).abs() <= 4.0 * se, format!("phi_smoothed {exact} vs MC {hits} (se {se})"))?;
    }

    // f_eps dominates the band indicator
    let mut rng = stream(5, Domain::Smoothing, 0);
    let mut violations = 0;
    for _ in 0..100_000 {
        let r: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let delta = rng.random_range(0.0..0.8);
        let eps = rng.random_range(0.01..0.8);
        let f = smoothing_f(&x, &r, delta, eps).map_err(e2s)?;
        if in_band(&x, &r, delta) && f < 1.0 {
            violations += 1;
        }
    }
    ensure(violations == 0, format!("{violations} points where f_eps < band indicator"))?;

    // gradient identity against central finite differences
    let h = 1e-7;
    let mut checked = 0;
    let mut worst = 0.0f64;
    while checked < 1000 {
        let r: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let delta = rng.random_range(0.05..0.5);
        let eps = rng.random_range(0.05..0.5);
        let x: Vec<f64> = r.iter().map(|v| v + rng.random_range(-(delta + 1.5 * eps)..(delta + 1.5 * eps))).collect();
        let g = match grad_f_l1(&x, &r, delta, eps) {
            Ok(g) => g,
            Err(_) => continue,
        };
        // stay clear of kinks by more than the difference step
        let w = x.iter().zip(&r).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
        let mut sorted: Vec<f64> = x.iter().zip(&r).map(|(a, b)| a - b).collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let near = [w + delta + eps, w + delta, w - delta, w - delta - eps].iter().any(|k| k.abs() < 1e3 * h)
            || sorted[0] - sorted[1] < 1e3 * h;
        if near {
            continue;
        }
        assert!(KINK_GUARD < 1e3 * h);
        let mut fd = 0.0;
        for k in 0..3 {
            let mut up = x.clone();
            let mut dn = x.clone();
            up[k] += h;
            dn[k] -= h;
            fd += ((smoothing_f(&up, &r, delta, eps).unwrap() - smoothing_f(&dn, &r, delta, eps).unwrap()) / (2.0 * h)).abs();
        }
        let err = (fd - g).abs() / g.max(1.0 / eps);
        worst = worst.max(err);
        checked += 1;
    }
    ensure(worst <= 1e-3, format!("gradient identity relative error {worst:e}"))?;
    Ok(format!("sum_cov, block identity, lag-2, phi MC, domination, gradient (worst rel {worst:.1e})"))
}

fn criterion_2() -> Check {
    let reps = 100_000;
    let mut notes = Vec::new();
    for p in [1usize, 5, 20] {
        let z = standard_gaussian(p, reps, 100 + p as u64);
        let family = build_rectangle_family(&z, &[], p, &FamilyConfig::for_dim(p)).map_err(e2s)?;
        for delta in [0.05, 0.1, 0.3] {
            let k = estimate_kappa(&z, delta, &family).map_err(e2s)?;
            let bound = nazarov_bound(delta, 1.0, p, 2.0).map_err(e2s)?;
            ensure(
                k.value <= bound + 3.0 * k.stderr,
                format!("p={p} delta={delta}: kappa {} > {bound} + 3 se", k.value),
            )?;
            if p == 1 {
                let exact = normal::cdf(delta) - normal::cdf(-delta);
                ensure(
                    (k.value - exact).abs() <= 4.0 * k.stderr,
                    format!("p=1 delta={delta}: kappa {} vs exact {exact}", k.value),
                )?;
            }
            notes.push(format!("{:.4}", k.value));
        }
    }
    Ok(format!("kappa_hat = [{}]", notes.join(", ")))
}

fn criterion_3() -> Check {
    let reps = 100_000;
    let mut notes = Vec::new();
    for p in [1usize, 3] {
        let a = standard_gaussian(p, reps, 300 + p as u64);
        let b = standard_gaussian(p, reps, 400 + p as u64);
        let family = build_rectangle_family(&a, &b, p, &FamilyConfig::for_dim(p)).map_err(e2s)?;
        let mu = estimate_mu(&a, &b, &family).map_err(e2s)?;
        ensure(mu.value <= 3.0 * mu.stderr + 0.005, format!("p={p}: null mu {} too large", mu.value))?;
        let same = estimate_mu(&a, &a, &family).map_err(e2s)?;
        ensure(same.value == 0.0, format!("p={p}: identical sets give {}", same.value))?;
        notes.push(format!("p={p} mu={:.4}", mu.value));
    }
    Ok(notes.join(", "))
}

fn criterion_4() -> Check {
    let reps = 100_000;
    let x = standard_gaussian(1, reps, 501);
    let y: Vec<f64> = standard_gaussian(1, reps, 502).iter().map(|v| 2.0 * v).collect();
    let family = build_rectangle_family(&x, &y, 1, &FamilyConfig::for_dim(1)).map_err(e2s)?;
    let mu = estimate_mu(&x, &y, &family).map_err(e2s)?;
    let gap = (mu.value - SHIFTED_VARIANCE_ORACLE).abs();
    ensure(gap <= 3.0 * mu.stderr, format!("mu {} vs oracle {SHIFTED_VARIANCE_ORACLE}", mu.value))?;
    Ok(format!("mu={:.5} oracle={SHIFTED_VARIANCE_ORACLE:.5} ({:.2} se)", mu.value, gap / mu.stderr))
}

fn criterion_5() -> Check {
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for (name, text) in [
        ("iid p=1", include_str!("../examples/configs/rademacher_iid.toml")),
        ("MA(1) p=3", include_str!("../examples/configs/ma1_rademacher_p3.toml")),
    ] {
        let cfg = Config::from_toml(text).map_err(e2s)?;
        let res = run_rate_experiment(&cfg, false).map_err(e2s)?;
        let fit = res.fit("direct").ok_or_else(|| format!("{name}: no slope fit"))?;
        notes.push(format!("{name} slope {:.3}", fit.slope));
        if !(-0.75..=-0.30).contains(&fit.slope) {
            failures.push(format!("{name} slope {:.3} outside [-0.75, -0.30]", fit.slope));
        }
        for o in &res.overlay {
            if !o.within {
                failures.push(format!("{name} n={} blocked/direct gap {:.4} > {:.4}", o.n, o.diff, o.tolerance));
            }
        }
        if !res.overlay.is_empty() {
            notes.push(format!("{} overlay points within 3 se", res.overlay.iter().filter(|o| o.within).count()));
        }
    }
    if failures.is_empty() {
        Ok(notes.join(", "))
    } else {
        Err(format!("{} ({})", failures.join("; "), notes.join(", ")))
    }
}

fn criterion_6() -> Check {
    let mut notes = Vec::new();
    for (m, seed) in [(2usize, 61u64), (4, 62)] {
        let spec = ma(3, m, seed);
        let n = 10 * m + 3;
        let before = extract_params(&spec, n, m, 200_000, seed).map_err(e2s)?;
        let after = blocked_params(&spec, n, m, RemainderPolicy::Absorb, 200_000, seed + 1).map_err(e2s)?;
        let tol = 1e-9;
        ensure(after.sigma_min >= before.sigma_min - tol, format!("m={m}: sigma_min {} < {}", after.sigma_min, before.sigma_min))?;
        ensure(
            after.sigma_lower >= before.sigma_lower - tol,
            format!("m={m}: sigma_lower {} < {}", after.sigma_lower, before.sigma_lower),
        )?;
        ensure(
            after.sigma_upper <= 2.0 * before.sigma_upper + tol,
            format!("m={m}: sigma_upper {} > 2 x {}", after.sigma_upper, before.sigma_upper),
        )?;
        let se = (after.nu3_stderr.powi(2) + 4.0 * before.nu3_stderr.powi(2)).sqrt();
        ensure(after.nu3 <= 2.0 * before.nu3 + 3.0 * se, format!("m={m}: nu3 {} > 2 x {}", after.nu3, before.nu3))?;
        notes.push(format!(
            "m={m}: s_min {:.3}->{:.3} s_low {:.3}->{:.3} s_up {:.3}->{:.3} nu3 {:.3}->{:.3}",
            before.sigma_min, after.sigma_min, before.sigma_lower, after.sigma_lower, before.sigma_upper, after.sigma_upper, before.nu3, after.nu3
        ));
    }
    Ok(notes.join("; "))
}

fn criterion_7() -> Check {
    let u = MomentParams::unit(1, 1);
    let a = theorem_bound(&u, 1, 1, 1.0).map_err(e2s)?;
    let b = theorem_bound(&u, 10, 5, 1.0).map_err(e2s)?;
    let c = epsilon_star(&u, 1, 1, 1.0).map_err(e2s)?.value;
    ensure((a - 2.0).abs() <= 1e-12, format!("theorem(1,1) = {a}"))?;
    ensure((b - THEOREM_N10_P5).abs() <= 1e-12, format!("theorem(10,5) = {b}"))?;
    ensure((c - 2.0).abs() <= 1e-12, format!("epsilon_star(1,1) = {c}"))?;
    let q = MomentParams { sigma_min: 0.8, sigma_lower: 0.7, sigma_upper: 1.6, nu1: 1.2, nu3: 3.1, ..u.clone() };
    for params in [&u, &q] {
        for p in [1, 5, 20] {
            for m in [1, 2, 4] {
                let vals: Vec<f64> = (6..=12).map(|k| corollary_bound(params, 1 << k, m, p, 1.0).unwrap()).collect();
                ensure(vals.windows(2).all(|w| w[1] < w[0]), format!("not decreasing in n (p={p}, m={m})"))?;
            }
            for k in 6..=12 {
                let n = 1usize << k;
                ensure(
                    corollary_bound(params, n, 1, p, 1.0).unwrap() == theorem_bound(params, n, p, 1.0).unwrap(),
                    format!("corollary(m=1) != theorem at n={n}"),
                )?;
            }
        }
    }
    Ok(format!("{a}, {b:.12}, {c}; monotone on 2^6..2^12; m=1 identity exact"))
}

fn criterion_8() -> Check {
    let mut notes = Vec::new();
    let eps_grid = [0.02, 0.05, 0.1, 0.2, 0.5, 1.0];
    for p in [1usize, 3] {
        let n = 16;
        let spec = make_ma_process(p, 1, coeffs(p, 1, 80 + p as u64), Innovation::Rademacher).map_err(e2s)?;
        let cov = spec.covariance().sum_covariance_len(n);
        let min_var = (0..p).map(|k| cov[(k, k)]).fold(f64::INFINITY, f64::min);
        let reps = 50_000;
        let x = sample_sums(&spec, n, reps, 81).map_err(e2s)?;
        let y = sample_sum_gaussian(&cov, reps, 82).map_err(e2s)?;
        // the eps grid is relative to the scale of the sums
        let scaled: Vec<f64> = eps_grid.iter().map(|e| e * min_var.sqrt()).collect();
        let rows = smoothing_lemma_check(&x, &y, p, &scaled, 2.0, min_var, &FamilyConfig::for_dim(p), 83).map_err(e2s)?;
        for r in &rows {
            ensure(r.holds, format!("p={p} eps={}: mu {} > rhs {} + tol {}", r.eps, r.mu, r.rhs, r.tolerance))?;
        }
        notes.push(format!("p={p} mu={:.4} min margin {:.4}", rows[0].mu, rows.iter().map(|r| r.rhs + r.tolerance - r.mu).fold(f64::INFINITY, f64::min)));
    }
    Ok(notes.join(", "))
}

const DETERMINISM_CONFIG: &str = r#"
seed = 99

[process]
p = 2
m = 1
coeffs = [[[1.0, 0.0], [0.3, 1.0]], [[0.5, 0.0], [0.0, 0.5]]]
innovation = { law = "rademacher" }

[params]
n = 32
n_mc = 20000

[estimate]
n = 32
replicates_x = 3000
replicates_y = 3000
deltas = [0.1, 0.3]
bootstrap = 20

[audit]
n = 16
replicates = 2000
n_mc = 5000

[rate]
ns = [16, 32, 64, 128]
replicates_x = 3000
replicates_y = 3000
n_mc = 5000
block_m = 2
svg = true
"#;

fn criterion_9() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg_path = dir.path().join("det.toml");
    std::fs::write(&cfg_path, DETERMINISM_CONFIG).map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_mdep");
    let mut compared = 0;
    for cmd in ["rate-experiment", "estimate-mu", "params", "audit", "simulate"] {
        for format in ["csv", "json"] {
            let mut reference: Option<Vec<(String, Vec<u8>)>> = None;
            for threads in ["1", "4", "8"] {
                let out = dir.path().join(format!("{cmd}-{format}-{threads}"));
                let status = Command::new(bin)
                    .args(["--config", cfg_path.to_str().unwrap(), "--threads", threads, "--format", format, "--out"])
                    .arg(&out)
                    .arg(cmd)
                    .output()
                    .map_err(|e| e.to_string())?;
                ensure(status.status.success(), format!("{cmd} failed: {}", String::from_utf8_lossy(&status.stderr)))?;
                let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
                    .map_err(|e| e.to_string())?
                    .map(|e| {
                        let e = e.unwrap();
                        (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
                    })
                    .collect();
                files.sort();
                match &reference {
                    None => reference = Some(files),
                    Some(r) => {
                        ensure(r == &files, format!("{cmd} --format {format}: outputs differ at {threads} threads"))?;
                        compared += files.len();
                    }
                }
            }
        }
    }
    Ok(format!("{compared} files byte-identical across 1/4/8 threads"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("oracle identities", criterion_1),
        ("Gaussian anti-concentration", criterion_2),
        ("null case", criterion_3),
        ("shifted-variance oracle", criterion_4),
        ("rate scaling", criterion_5),
        ("blocked constants", criterion_6),
        ("bound calculators", criterion_7),
        ("smoothing inequality", criterion_8),
        ("determinism", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|a| a == &id || name.contains(a.as_str())) {
            continue;
        }
        let t = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("PASS criterion {id} ({name}) [{secs:.1}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id} ({name}) [{secs:.1}s]: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
