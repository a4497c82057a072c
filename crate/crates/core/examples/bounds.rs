//! Evaluate the bound formulas and the smoothing scale.
//!
//! ```bash
//! cargo run --example bounds
//! ```

use mdep_clt::bounds::{corollary_bound, epsilon_star, theorem_bound};
use mdep_clt::params::MomentParams;

fn main() -> mdep_clt::Result<()> {
    let unit = MomentParams::unit(1, 1);
    println!("all constants 1, n = 1, p = 1: {}", theorem_bound(&unit, 1, 1, 1.0)?);
    println!("all constants 1, n = 10, p = 5: {}", theorem_bound(&unit, 10, 5, 1.0)?);
    println!("eps* at n = 1, p = 1: {:?}", epsilon_star(&unit, 1, 1, 1.0)?);

    println!("\n{:>6} {:>12} {:>12} {:>12}", "n", "m=1", "m=2", "m=4");
    for k in 6..=12 {
        let n = 1usize << k;
        let row: Vec<String> = [1, 2, 4]
            .iter()
            .map(|&m| format!("{:>12.5}", corollary_bound(&unit, n, m, 20, 1.0).unwrap()))
            .collect();
        println!("{n:>6} {}", row.join(" "));
    }
    Ok(())
}
