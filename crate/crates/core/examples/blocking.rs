//! Reduce an MA(2) process to a 1-dependent blocked sequence and compare the
//! constants before and after.
//!
//! ```bash
//! cargo run --release --example blocking
//! ```

use std::sync::Arc;

use mdep_clt::batch::RemainderPolicy;
use mdep_clt::blocking::{block_reduce, blocked_params, verify_m_dependence};
use mdep_clt::params::extract_params;
use mdep_clt::procgen::{make_ma_process, sample_paths, Innovation};
use nalgebra::dmatrix;

fn main() -> mdep_clt::Result<()> {
    let spec = Arc::new(make_ma_process(
        2,
        2,
        vec![dmatrix![1.0, 0.0; 0.5, 1.0], dmatrix![0.6, 0.0; 0.0, 0.6], dmatrix![0.3, -0.2; 0.0, 0.3]],
        Innovation::Rademacher,
    )?);
    let (n, m) = (41, 2);

    let batch = sample_paths(&spec, n, 4000, 3)?;
    let blocked = block_reduce(&batch, m)?;
    println!("n = {n} -> {} blocks (last block holds {} terms)", blocked.n(), n - m * (blocked.n() - 1));
    let s = batch.prefix_sum(1, n)?;
    let sb = blocked.prefix_sum(1, blocked.n())?;
    let err = s.iter().zip(&sb).map(|(a, b)| (a - m as f64 * b).abs()).fold(0.0, f64::max);
    println!("max |S - m S'| over replicates: {err:.2e}");

    let before = extract_params(&spec, n, m, 100_000, 5)?;
    let after = blocked_params(&spec, n, m, RemainderPolicy::Absorb, 100_000, 5)?;
    println!("sigma_min   {:.4} -> {:.4}", before.sigma_min, after.sigma_min);
    println!("sigma_lower {:.4} -> {:.4}", before.sigma_lower, after.sigma_lower);
    println!("sigma_upper {:.4} -> {:.4} (2x = {:.4})", before.sigma_upper, after.sigma_upper, 2.0 * before.sigma_upper);
    println!("nu3         {:.4} -> {:.4} (2x = {:.4})", before.nu3, after.nu3, 2.0 * before.nu3);

    let check = verify_m_dependence(&blocked, 1, 9)?;
    println!("blocked lag>1 check: stat {:.4} vs null p95 {:.4} -> {}", check.statistic, check.null_p95, check.passed);
    Ok(())
}
