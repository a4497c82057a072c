//! Sample an MA(1) process, compare empirical lag covariances with the
//! analytic ones, and round-trip the batch through the binary container.
//!
//! ```bash
//! cargo run --release --example simulate_ma
//! ```

use std::sync::Arc;

use mdep_clt::persist::{read_batch, write_batch};
use mdep_clt::procgen::{make_ma_process, sample_paths, Innovation};
use nalgebra::dmatrix;

fn main() -> mdep_clt::Result<()> {
    let spec = Arc::new(make_ma_process(
        2,
        1,
        vec![dmatrix![1.0, 0.0; 0.3, 1.0], dmatrix![0.5, 0.0; 0.0, -0.5]],
        Innovation::Rademacher,
    )?);
    let (n, reps) = (32, 20_000);
    let batch = sample_paths(&spec, n, reps, 42)?;

    for lag in 0..=2usize {
        let exact = spec.covariance().lag(lag as isize);
        let i = n / 2;
        let mut emp = [[0.0; 2]; 2];
        for r in 0..reps {
            let (a, b) = (batch.x(r, i), batch.x(r, i + lag));
            for k in 0..2 {
                for l in 0..2 {
                    emp[k][l] += a[k] * b[l] / reps as f64;
                }
            }
        }
        let exact = [[exact[(0, 0)], exact[(0, 1)]], [exact[(1, 0)], exact[(1, 1)]]];
        println!("lag {lag}: exact {exact:?}");
        println!("       empirical [[{:.3}, {:.3}], [{:.3}, {:.3}]]", emp[0][0], emp[0][1], emp[1][0], emp[1][1]);
    }

    let var = spec.covariance().sum_covariance_len(n);
    println!("Var S_[1,{n}] =\n{var}");

    let dir = std::env::temp_dir().join("mdep_simulate_ma");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("batch.bin");
    write_batch(&batch, &path)?;
    let back = read_batch(&path)?;
    assert_eq!(back.data(), batch.data());
    println!("round-tripped {} floats through {}", back.data().len(), path.display());
    Ok(())
}
