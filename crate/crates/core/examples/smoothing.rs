//! The piecewise-linear smoothing function, its gradient identity, and an
//! empirical check of the Gaussian smoothing inequality.
//!
//! ```bash
//! cargo run --release --example smoothing
//! ```

use std::sync::Arc;

use mdep_clt::distance::FamilyConfig;
use mdep_clt::experiment::smoothing_lemma_check;
use mdep_clt::gaussian::sample_sum_gaussian;
use mdep_clt::procgen::{make_ma_process, sample_sums, Innovation};
use mdep_clt::smoothing::{grad_f_l1, smoothing_f};
use nalgebra::DMatrix;

fn main() -> mdep_clt::Result<()> {
    let r = [0.0, 0.0];
    let (delta, eps) = (0.3, 0.2);
    for w in [-0.7, -0.4, 0.0, 0.4, 0.6] {
        let x = [w, -3.0];
        println!("w = {w:>5}: f = {:.3}, |grad f|_1 = {:?}", smoothing_f(&x, &r, delta, eps)?, grad_f_l1(&x, &r, delta, eps).ok());
    }

    for p in [1, 3] {
        let n = 16;
        let spec = Arc::new(make_ma_process(p, 0, vec![DMatrix::identity(p, p)], Innovation::Rademacher)?);
        let scale = 1.0 / (n as f64).sqrt();
        let x: Vec<f64> = sample_sums(&spec, n, 20_000, 1)?.iter().map(|v| v * scale).collect();
        let y = sample_sum_gaussian(&DMatrix::identity(p, p), 20_000, 2)?;
        let rows = smoothing_lemma_check(&x, &y, p, &[0.05, 0.1, 0.3, 1.0], 2.0, 1.0, &FamilyConfig::for_dim(p), 3)?;
        for row in rows {
            println!(
                "p={p} eps={:<4} mu {:.4} <= 2 mu_eps {:.4} + slack {:.4} (+tol {:.4}): {}",
                row.eps,
                row.mu,
                2.0 * row.mu_smoothed,
                row.slack,
                row.tolerance,
                row.holds
            );
        }
    }
    Ok(())
}
