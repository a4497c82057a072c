//! Audit the inductive inequalities on i.i.d. Rademacher sums.
//!
//! ```bash
//! cargo run --release --example lemma_audit
//! ```

use mdep_clt::config::Config;
use mdep_clt::experiment::run_audit;

fn main() -> mdep_clt::Result<()> {
    let mut cfg = Config::from_toml(include_str!("configs/rademacher_iid.toml"))?;
    cfg.audit.replicates = 5000;
    let out = run_audit(&cfg)?;
    let rep = &out.report;
    println!("C1 = {:.4}", rep.c1);
    let worst = rep.kappa_ratios.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)).unwrap();
    println!("  attained at i = {} (kappa {:.4}, denominator {:.4})", worst.i, worst.kappa, worst.denominator);
    let r = &rep.mu_rhs;
    println!("mu_n RHS at C = {}: leading {:.4} + remainder {:.4} + feedback {:.4} = {:.4}", rep.settings.c, r.leading, r.remainder, r.feedback, r.total);
    if let Some(c2) = rep.c2 {
        println!("smallest C making the mu_n inequality hold: {c2:.4}");
    }
    Ok(())
}
