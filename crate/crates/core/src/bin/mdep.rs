use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mdep_clt::config::Config;
use mdep_clt::experiment::{run_audit, run_block, run_bound, run_estimate, run_params, run_rate_experiment, run_simulate};
use mdep_clt::output::{refuse_overwrite, Format, Report};
use mdep_clt::persist::{sidecar_path, write_batch};
use mdep_clt::svg::{loglog_chart, Series};
use mdep_clt::{Error, Result};

/// Environment variable holding the default worker thread count.
const THREADS_ENV: &str = "MDEP_THREADS";

#[derive(Parser)]
#[command(name = "mdep", version, about = "Berry-Esseen experiments for m-dependent random vectors")]
struct Cli {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (overrides the config and MDEP_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; results go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Overwrite existing outputs and run Gaussian-innovation rate experiments.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a batch of process paths.
    Simulate,
    /// Extract the assumption constants of the process.
    Params,
    /// Evaluate the bound formulas.
    Bound,
    /// Reduce a batch to a 1-dependent blocked batch.
    Block,
    /// Estimate the rectangle distance and anti-concentration levels.
    EstimateMu,
    /// Audit the inductive inequalities.
    Audit,
    /// Empirical rate of the rectangle distance over a grid of n.
    RateExperiment,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn thread_count(cli: &Cli, cfg: &Config) -> Result<Option<usize>> {
    if let Some(t) = cli.threads.or(cfg.threads) {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{THREADS_ENV}={v} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let threads = thread_count(&cli, &cfg)?;
    if threads == Some(0) {
        return Err(Error::Config("thread count must be positive".into()));
    }
    cfg.threads = threads;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| dispatch(&cli, &cfg))
}

fn dispatch(cli: &Cli, cfg: &Config) -> Result<()> {
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let base = cli.config.as_deref().and_then(Path::parent).unwrap_or(Path::new("."));
    let report = match cli.command {
        Command::Simulate => {
            let (batch, rows) = run_simulate(cfg)?;
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)?;
                let path = dir.join("batch.bin");
                refuse_overwrite(&path, cli.force)?;
                refuse_overwrite(&sidecar_path(&path), cli.force)?;
                write_batch(&batch, &path)?;
            }
            Report::new("simulate", cfg).table("simulate", &rows)?
        }
        Command::Params => Report::new("params", cfg).table("params", &[run_params(cfg)?])?,
        Command::Bound => Report::new("bound", cfg).table("bound", &[run_bound(cfg)?])?,
        Command::Block => {
            let (blocked, row) = run_block(cfg, base)?;
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)?;
                let path = dir.join("blocked.bin");
                refuse_overwrite(&path, cli.force)?;
                refuse_overwrite(&sidecar_path(&path), cli.force)?;
                write_batch(&blocked, &path)?;
            }
            Report::new("block", cfg).table("block", &[row])?
        }
        Command::EstimateMu => Report::new("estimate-mu", cfg).table("estimate_mu", &run_estimate(cfg)?)?,
        Command::Audit => {
            let out = run_audit(cfg)?;
            Report::new("audit", cfg)
                .table("audit_summary", &[&out.report.mu_rhs])?
                .table("audit_kappa", &out.report.kappa_ratios)?
                .table("audit_mu", &out.mu)?
                .table("audit_params", &[&out.params])?
                .table("audit_c", &[serde_json::json!({ "c1": out.report.c1, "c2": out.report.c2 })])?
        }
        Command::RateExperiment => {
            let res = run_rate_experiment(cfg, cli.force)?;
            if cfg.rate.svg {
                if let Some(dir) = &cli.out {
                    std::fs::create_dir_all(dir)?;
                    let path = dir.join("rate_experiment.svg");
                    refuse_overwrite(&path, cli.force)?;
                    std::fs::write(&path, rate_chart(&res))?;
                }
            }
            let fits: Vec<serde_json::Value> = res
                .fits
                .iter()
                .map(|f| {
                    serde_json::json!({
                        "variant": f.variant,
                        "slope": f.fit.as_ref().map(|x| x.slope),
                        "intercept": f.fit.as_ref().map(|x| x.intercept),
                        "r2": f.fit.as_ref().map(|x| x.r2),
                        "used": f.fit.as_ref().map(|x| x.used.len()),
                        "excluded": f.fit.as_ref().map(|x| x.excluded.len()),
                        "error": f.error,
                    })
                })
                .collect();
            let mut rep = Report::new("rate-experiment", cfg).table("rate_experiment", &res.rows)?.table("rate_fit", &fits)?;
            if !res.overlay.is_empty() {
                rep = rep.table("rate_overlay", &res.overlay)?;
            }
            rep
        }
    };
    match &cli.out {
        Some(dir) => {
            for path in report.write(dir, format, cli.force)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => print!("{}", report.render(format)?),
    }
    Ok(())
}

fn rate_chart(res: &mdep_clt::experiment::RateResult) -> String {
    let mut series = Vec::new();
    for (variant, color) in [("direct", "#1f77b4"), ("blocked", "#d62728")] {
        let points: Vec<(f64, f64)> = res.points(variant).iter().map(|q| (q.n_eff, q.mu_hat)).collect();
        if !points.is_empty() {
            series.push(Series { label: variant.into(), color: color.into(), points, dashed: false });
        }
    }
    if let Some(first) = res.points("direct").iter().find(|q| q.mu_hat > 0.0) {
        let last = res.points("direct").last().map(|q| q.n_eff).unwrap_or(first.n_eff);
        let refline = |x: f64| first.mu_hat * (x / first.n_eff).powf(-0.5);
        series.push(Series {
            label: "slope -1/2".into(),
            color: "#777".into(),
            points: vec![(first.n_eff, refline(first.n_eff)), (last, refline(last))],
            dashed: true,
        });
    }
    loglog_chart("rectangle distance vs effective sample size", "n_eff", "mu_hat", &series)
}
