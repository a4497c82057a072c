//! Extract the covariance and moment constants of a few processes.
//!
//! ```bash
//! cargo run --release --example moment_params
//! ```

use mdep_clt::params::extract_params;
use mdep_clt::procgen::{make_ma_process, Innovation};
use nalgebra::{dmatrix, DMatrix};

fn main() -> mdep_clt::Result<()> {
    let n = 64;
    let cases = [
        ("iid N(0, I_3), m = 1", make_ma_process(3, 0, vec![DMatrix::identity(3, 3)], Innovation::StandardGaussian)?, 1),
        (
            "MA(1) scalar, a = (1, 0.5)",
            make_ma_process(1, 1, vec![dmatrix![1.0], dmatrix![0.5]], Innovation::Rademacher)?,
            1,
        ),
        (
            "MA(2) in R^2, exponential innovations",
            make_ma_process(
                2,
                2,
                vec![dmatrix![1.0, 0.0; 0.2, 1.0], dmatrix![0.4, 0.0; 0.0, 0.4], dmatrix![0.0, 0.3; 0.3, 0.0]],
                Innovation::CenteredExponential { rate: 1.0 },
            )?,
            2,
        ),
    ];
    println!("{:<40} {:>9} {:>9} {:>9} {:>8} {:>8}", "process", "sig_min", "sig_low", "sig_up", "nu1", "nu3");
    for (name, spec, m) in &cases {
        let q = extract_params(spec, n, *m, 200_000, 1)?;
        println!(
            "{name:<40} {:>9.4} {:>9.4} {:>9.4} {:>8.4} {:>8.4}",
            q.sigma_min, q.sigma_lower, q.sigma_upper, q.nu1, q.nu3
        );
    }
    Ok(())
}
