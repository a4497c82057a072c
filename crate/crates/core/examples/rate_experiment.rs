//! Empirical decay of the rectangle distance with the effective sample size.
//!
//! Takes an optional config path and output directory:
//!
//! ```bash
//! cargo run --release --example rate_experiment -- examples/configs/ma1_rademacher_p3.toml /tmp/rate
//! ```

use std::path::PathBuf;

use mdep_clt::config::Config;
use mdep_clt::experiment::run_rate_experiment;
use mdep_clt::svg::{loglog_chart, Series};

fn main() -> mdep_clt::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(path) => Config::load(&PathBuf::from(path))?,
        None => {
            let mut c = Config::from_toml(include_str!("configs/rademacher_iid.toml"))?;
            c.rate.ns = vec![64, 128, 256, 512, 1024];
            c
        }
    };
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("mdep_rate"));

    let res = run_rate_experiment(&cfg, false)?;
    println!("{:>8} {:>6} {:>8} {:>9} {:>9} {:>10}", "variant", "n", "n_eff", "mu_hat", "stderr", "bound");
    for r in &res.rows {
        println!("{:>8} {:>6} {:>8.1} {:>9.4} {:>9.4} {:>10.4}", r.variant, r.n, r.n_eff, r.mu_hat, r.stderr, r.bound);
    }
    for f in &res.fits {
        match &f.fit {
            Some(fit) => println!("{}: slope {:.3}, r2 {:.3}, {} points excluded", f.variant, fit.slope, fit.r2, fit.excluded.len()),
            None => println!("{}: {}", f.variant, f.error.as_deref().unwrap_or("no fit")),
        }
    }
    for o in &res.overlay {
        println!("n={} blocked vs direct: |diff| {:.4} <= {:.4}: {}", o.n, o.diff, o.tolerance, o.within);
    }

    std::fs::create_dir_all(&out)?;
    let series: Vec<Series> = [("direct", "#1f77b4"), ("blocked", "#d62728")]
        .iter()
        .map(|(v, c)| Series {
            label: v.to_string(),
            color: c.to_string(),
            points: res.points(v).iter().map(|q| (q.n_eff, q.mu_hat)).collect(),
            dashed: false,
        })
        .filter(|s| !s.points.is_empty())
        .collect();
    let path = out.join("rate.svg");
    std::fs::write(&path, loglog_chart("mu_hat vs n_eff", "n_eff", "mu_hat", &series))?;
    println!("chart: {}", path.display());
    Ok(())
}
