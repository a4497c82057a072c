use std::sync::Arc;

use mdep_clt::procgen::{make_ma_process, sample_paths, sample_sums, Innovation, ProcessSpec};
use nalgebra::DMatrix;

fn spec(innovation: Innovation) -> Arc<ProcessSpec> {
    let a0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.4, 1.0]);
    let a1 = DMatrix::from_row_slice(2, 2, &[0.5, -0.3, 0.0, 0.8]);
    Arc::new(make_ma_process(2, 1, vec![a0, a1], innovation).unwrap())
}

/// Empirical `E[u_a v_b]` with its standard error.
fn cross_moment(u: &[f64], v: &[f64]) -> (f64, f64) {
    let r = u.len() as f64;
    let prods: Vec<f64> = u.iter().zip(v).map(|(a, b)| a * b).collect();
    let mean = prods.iter().sum::<f64>() / r;
    let var = prods.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

#[test]
fn lag_covariances_match_monte_carlo() {
    for innovation in [Innovation::Rademacher, Innovation::CenteredExponential { rate: 2.0 }, Innovation::StandardGaussian] {
        let spec = spec(innovation);
        let reps = 40_000;
        let batch = sample_paths(&spec, 6, reps, 17).unwrap();
        for lag in 0..=2usize {
            let truth = spec.covariance().lag(lag as isize);
            for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let u: Vec<f64> = (0..reps).map(|r| batch.x(r, 3)[a]).collect();
                let v: Vec<f64> = (0..reps).map(|r| batch.x(r, 3 + lag)[b]).collect();
                let (est, se) = cross_moment(&u, &v);
                assert!(
                    (est - truth[(a, b)]).abs() <= 5.0 * se,
                    "{innovation:?} lag {lag} ({a},{b}): {est} vs {}",
                    truth[(a, b)]
                );
            }
        }
    }
}

#[test]
fn sum_variance_matches_monte_carlo() {
    let spec = spec(Innovation::Rademacher);
    let (n, reps) = (12, 40_000);
    let sums = sample_sums(&spec, n, reps, 23).unwrap();
    let truth = spec.covariance().sum_covariance_len(n);
    for (a, b) in [(0, 0), (0, 1), (1, 1)] {
        let u: Vec<f64> = sums.chunks_exact(2).map(|s| s[a]).collect();
        let v: Vec<f64> = sums.chunks_exact(2).map(|s| s[b]).collect();
        let (est, se) = cross_moment(&u, &v);
        assert!((est - truth[(a, b)]).abs() <= 5.0 * se, "({a},{b}): {est} vs {}", truth[(a, b)]);
    }
}

#[test]
fn sampling_is_thread_invariant() {
    let spec = spec(Innovation::CenteredExponential { rate: 1.0 });
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| (sample_paths(&spec, 9, 3000, 5).unwrap(), sample_sums(&spec, 50, 3000, 5).unwrap()))
    };
    let (b1, s1) = run(1);
    for t in [2, 4, 8] {
        let (b, s) = run(t);
        assert!(b1.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(s1.iter().zip(&s).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
