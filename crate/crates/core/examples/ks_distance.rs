//! Rectangle Kolmogorov-Smirnov distance between sample sets.
//!
//! ```bash
//! cargo run --release --example ks_distance
//! ```

use mdep_clt::distance::{build_rectangle_family, estimate_mu, estimate_mu_bootstrap, FamilyConfig};
use mdep_clt::experiment::standard_gaussian;

fn main() -> mdep_clt::Result<()> {
    let reps = 100_000;
    let x = standard_gaussian(1, reps, 1);
    let y: Vec<f64> = standard_gaussian(1, reps, 2).iter().map(|v| 2.0 * v).collect();
    let family = build_rectangle_family(&x, &y, 1, &FamilyConfig::for_dim(1))?;
    let mu = estimate_mu(&x, &y, &family)?;
    println!("N(0,1) vs N(0,4): mu = {:.5} +- {:.5} (oracle 0.16134)", mu.value, mu.stderr);

    for p in [1, 3] {
        let a = standard_gaussian(p, reps, 10 + p as u64);
        let b = standard_gaussian(p, reps, 20 + p as u64);
        let family = build_rectangle_family(&a, &b, p, &FamilyConfig::for_dim(p))?;
        let null = estimate_mu(&a, &b, &family)?;
        let same = estimate_mu(&a, &a, &family)?;
        println!("p={p}: independent N(0,I) sets mu = {:.5} (stderr {:.5}), identical sets mu = {}", null.value, null.stderr, same.value);
    }

    let small_x = &x[..5000];
    let small_y = &y[..5000];
    let family = build_rectangle_family(small_x, small_y, 1, &FamilyConfig::for_dim(1))?;
    let boot = estimate_mu_bootstrap(small_x, small_y, &family, 200, 7)?;
    println!("R=5000: mu = {:.4}, binomial stderr {:.4}, bootstrap stderr {:.4}", boot.value, boot.stderr, boot.bootstrap_stderr.unwrap());
    Ok(())
}
