use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use elicitsurv::config::{load_config, DatasetConfig, RunConfig, SchemeConfig};
use elicitsurv::dataset::TimeUnit;
use elicitsurv::error::{AppError, Result};
use elicitsurv::output::write_atomic;
use elicitsurv::pipeline::{self, Analysis, Artifacts};
use elicitsurv::service::{self, AppState};
use elicitsurv::synthetic::synthetic_csv;
use elicitsurv_core::evidence::format_linear;
use elicitsurv_core::{Arm, ModelFamily};

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "ELICITSURV_THREADS";

#[derive(Debug, Parser)]
#[command(name = "elicitsurv", version, about = "Prior-informed comparison of parametric survival models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration. Defaults to the built-in case study.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory. Defaults to the config's `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the run, Hellinger and sampler seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Prior draws per family.
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    /// Survival times for the Hellinger distances.
    #[arg(long = "J", global = true)]
    j: Option<usize>,
    /// Comma-separated model families.
    #[arg(long, global = true, value_delimiter = ',')]
    families: Option<Vec<ModelFamily>>,
    /// dilution, uniform, anchored:<f1>, jeffreys, dim_equal or dim_harmonic.
    #[arg(long, global = true)]
    scheme: Option<SchemeConfig>,
    /// Run on the simulated stand-in dataset.
    #[arg(long, global = true)]
    no_data: bool,
    /// Dataset file, replacing the config's.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Time unit of `--data`.
    #[arg(long, global = true, default_value = "days")]
    unit: TimeUnit,
    /// Metropolis-Hastings iterations per chain, burn-in included.
    #[arg(long, global = true)]
    iterations: Option<usize>,
    #[arg(long, global = true)]
    burn_in: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit distributions to the elicited quartiles.
    FitPrior,
    /// Sample the joint prior of each family.
    SamplePrior,
    /// Monte Carlo evidence per family and arm.
    Bme,
    /// Prior model weights and posterior model probabilities.
    Weights,
    /// Metropolis-Hastings posterior summaries.
    Posterior,
    /// Kaplan-Meier estimates.
    Km,
    /// Binned empirical hazard.
    Hazard,
    /// Maximum-likelihood fits with AIC and BIC.
    Ic,
    /// Every step, writing all tables and figures.
    Report,
    /// Write the simulated stand-in dataset as CSV (times in days).
    Synthetic,
    /// Serve the elicitation API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: std::net::SocketAddr,
        /// Directory for session snapshots.
        #[arg(long)]
        sessions_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| AppError::Validation(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| AppError::Validation(format!("{THREADS_ENV}: {e}")))
}

/// The configuration with command-line overrides applied, and the directory
/// relative dataset paths resolve against.
fn effective_config(cli: &Cli) -> Result<(RunConfig, PathBuf)> {
    let (mut cfg, base) = match &cli.config {
        Some(path) => {
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (load_config(path)?, base)
        }
        None => {
            let mut cfg = RunConfig::case_study();
            if let Some(d) = cfg.dataset.as_mut() {
                d.path = PathBuf::from("data/gbsg.csv");
            }
            (cfg, PathBuf::from("."))
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.hellinger.seed = seed;
        cfg.mh.seed = seed;
    }
    if let Some(n) = cli.n {
        cfg.n_draws = n;
        cfg.hellinger.n = cfg.hellinger.n.min(n);
    }
    if let Some(j) = cli.j {
        cfg.hellinger.j = j;
    }
    if let Some(f) = &cli.families {
        cfg.families = f.clone();
    }
    if let Some(s) = cli.scheme {
        cfg.scheme = s;
    }
    if let Some(it) = cli.iterations {
        cfg.mh.iterations = it;
        cfg.mh.burn_in = cfg.mh.burn_in.min(it / 2);
    }
    if let Some(b) = cli.burn_in {
        cfg.mh.burn_in = b;
    }
    if let Some(path) = &cli.data {
        let path = std::path::absolute(path).map_err(AppError::io(path))?;
        cfg.dataset = Some(DatasetConfig { path, unit: cli.unit });
    }
    cfg.validate()?;
    Ok((cfg, base))
}

fn analysis(cli: &Cli) -> Result<Analysis> {
    let (cfg, base) = effective_config(cli)?;
    Analysis::new(cfg, &base, cli.no_data)
}

fn save(cli: &Cli, cfg: &RunConfig, out: &Artifacts) -> Result<()> {
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    for p in out.save(&dir)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut out = Artifacts::default();
    match &cli.command {
        Command::Serve { addr, sessions_dir } => {
            let state = match sessions_dir {
                Some(d) => AppState::with_snapshots(d.clone())?,
                None => AppState::in_memory(),
            };
            let rt = tokio::runtime::Runtime::new().map_err(AppError::io("tokio runtime"))?;
            println!("listening on http://{addr}");
            return rt.block_on(service::serve(*addr, state)).map_err(AppError::io(addr.to_string()));
        }
        Command::Synthetic => {
            let (cfg, _) = effective_config(&cli)?;
            let text = synthetic_csv(cfg.seed);
            match &cli.out {
                Some(path) => {
                    write_atomic(path, text.as_bytes())?;
                    println!("wrote {}", path.display());
                }
                None => print!("{text}"),
            }
            return Ok(());
        }
        Command::FitPrior => {
            let (cfg, _) = effective_config(&cli)?;
            let (_, fits) = cfg.prior.build()?;
            for (q, f) in cfg.prior.quantities.iter().zip(&fits) {
                println!("{}: {} (residual {:.2e})", q.name, pipeline::dist_label(&f.distribution), f.residual);
            }
            out.table("table1", &pipeline::table1(&cfg.prior, &fits));
            return save(&cli, &cfg, &out);
        }
        _ => {}
    }

    let a = analysis(&cli)?;
    match cli.command {
        Command::SamplePrior => {
            let runs = a.run_priors(false)?;
            for r in &runs {
                println!(
                    "{}: acceptance {:.4}, draw efficiency {:.4}, most violated {}",
                    r.family,
                    r.draws.acceptance_rate,
                    r.draws.draw_efficiency,
                    r.draws.most_violated().map(|c| c.to_string()).unwrap_or_else(|| "none".into())
                );
            }
            out.table("prior_summary", &pipeline::prior_summary_table(&runs));
            out.table("prior_rejections", &pipeline::rejection_table(&runs));
        }
        Command::Bme => {
            let runs = a.run_priors(true)?;
            for r in &runs {
                for e in r.evidence.iter().flatten() {
                    println!(
                        "{} arm {}: ln BME {:.4} ({}), MC s.e. {:.3}",
                        r.family,
                        e.arm().unwrap_or(Arm::One),
                        e.log_bme,
                        format_linear(e.log_bme),
                        e.mc_standard_error
                    );
                }
            }
            out.table("bme", &pipeline::bme_table(&runs));
            out.table("bme_trace", &pipeline::bme_trace_table(&runs));
            out.chart("fig_bme_trace", &pipeline::fig_bme_trace(&runs));
        }
        Command::Weights => {
            let runs = a.run_priors(true)?;
            let w = a.weights(&runs)?;
            for aw in &w {
                for (i, f) in aw.table.families.iter().enumerate() {
                    let post = aw.table.posterior.as_ref().map(|p| p[i]).unwrap_or(f64::NAN);
                    println!("arm {} {f}: prior {:.4}, posterior {:.7}", aw.arm, aw.table.prior[i], post);
                }
            }
            out.table("table2", &pipeline::table2(&w));
            out.table("bayes_factors", &pipeline::bayes_factor_table(&runs)?);
            if w.iter().any(|x| x.distances.is_some()) {
                out.table("hellinger", &pipeline::hellinger_table(&w));
            }
        }
        Command::Posterior => {
            let priors = a.run_priors(false)?;
            let posts = a.posteriors()?;
            for p in &posts {
                let m = |k: usize| p.means[k].map(|s| format!("{:.2} ({:.2}, {:.2})", s.mean, s.lower, s.upper));
                println!(
                    "{}: mean arm 1 {}, arm 2 {}, incremental {}",
                    p.family,
                    m(0).unwrap_or_default(),
                    m(1).unwrap_or_default(),
                    m(2).unwrap_or_default()
                );
                for w in &p.draws.warnings {
                    eprintln!("warning: {}: {w}", p.family);
                }
            }
            out.table("table3", &pipeline::table3(&priors, &posts));
            out.table("posterior_survival", &pipeline::posterior_survival_table(&posts));
            out.table("mh_diagnostics", &pipeline::diagnostics_table(&posts));
        }
        Command::Km => {
            out.table("km", &pipeline::km_table(&a.data)?);
            out.chart("fig_km", &pipeline::fig_km(&a.data, &[], a.cfg.horizon)?);
        }
        Command::Hazard => {
            out.table("hazard", &pipeline::hazard_table(&a.data, a.cfg.hazard_bin_width)?);
            out.chart("fig_hazard", &pipeline::fig_hazard(&a.data, a.cfg.hazard_bin_width)?);
        }
        Command::Ic => {
            let rows = a.mle_fits();
            for r in &rows {
                match &r.result {
                    Ok((fit, c)) => println!(
                        "{} arm {}: logL {:.3}, AIC {:.3}, BIC {:.3}",
                        r.family, r.arm, fit.log_likelihood, c.aic, c.bic
                    ),
                    Err(e) => println!("{} arm {}: {e}", r.family, r.arm),
                }
            }
            out.table("ic", &pipeline::ic_table(&rows));
        }
        Command::Report => {
            let dir = cli.out.clone().unwrap_or_else(|| a.cfg.output_dir.clone());
            let bundle = pipeline::write_report(&a, &dir)?;
            for p in &bundle.paths {
                println!("wrote {}", p.display());
            }
            for w in &bundle.warnings {
                eprintln!("warning: {w}");
            }
            return Ok(());
        }
        Command::FitPrior | Command::Synthetic | Command::Serve { .. } => unreachable!("handled above"),
    }
    save(&cli, &a.cfg, &out)
}
