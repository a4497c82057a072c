//! Band probabilities of standard Gaussian vectors against the Nazarov bound.
//!
//! ```bash
//! cargo run --release --example anti_concentration
//! ```

use mdep_clt::distance::{build_rectangle_family, estimate_kappa, FamilyConfig};
use mdep_clt::experiment::standard_gaussian;
use mdep_clt::gaussian::nazarov_bound;
use mdep_clt::normal;

fn main() -> mdep_clt::Result<()> {
    let reps = 50_000;
    for p in [1, 5, 20] {
        let z = standard_gaussian(p, reps, p as u64);
        let family = build_rectangle_family(&z, &[], p, &FamilyConfig::for_dim(p))?;
        for delta in [0.05, 0.1, 0.3] {
            let k = estimate_kappa(&z, delta, &family)?;
            let bound = nazarov_bound(delta, 1.0, p, 2.0)?;
            let exact = if p == 1 { format!("  exact {:.4}", normal::cdf(delta) - normal::cdf(-delta)) } else { String::new() };
            println!("p={p:<2} delta={delta:<4} kappa {:.4} +- {:.4}  bound(C=2) {:.4}{exact}", k.value, k.stderr, bound);
        }
    }
    Ok(())
}
