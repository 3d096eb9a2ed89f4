//! Analysis steps shared by the CLI subcommands and the full report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use elicitsurv_core::evidence::{default_checkpoints, format_linear};
use elicitsurv_core::{
    bayes_factor, dilution_prior, empirical_hazard, hellinger_matrix, information_criteria,
    kaplan_meier, mle_fit, posterior_model_probs, run_mh, sample_prior, scheme_prior, summarize, Arm,
    DistanceMatrix, EvidenceResult, FitReport, FittedDist, Functional, MhSettings, ModelFamily, PosteriorDraws,
    PriorDraws, PriorSpec, SummaryStat, SurvivalDataset, WeightTable,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{PriorConfig, RunConfig, SchemeConfig};
use crate::dataset::load_dataset;
use crate::error::{AppError, Result};
use crate::output::{num, opt_num, write_atomic, Table};
use crate::plot::{Chart, Series, SeriesKind};
use crate::synthetic::synthetic_dataset;

/// Survival-curve grid spacing, years.
pub const GRID_STEP: f64 = 0.25;

/// Seed for `family` derived from a run seed. Depends on the family itself
/// rather than its position in the run, so subsets reproduce full runs.
pub fn family_seed(seed: u64, family: ModelFamily) -> u64 {
    let k = ModelFamily::ALL.iter().position(|f| *f == family).unwrap_or(0) as u64 + 1;
    seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    File { path: PathBuf },
    Synthetic { seed: u64 },
}

/// A validated configuration with its fitted prior and dataset.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub cfg: RunConfig,
    pub spec: PriorSpec,
    pub fits: Vec<FitReport>,
    pub data: SurvivalDataset,
    pub source: DataSource,
}

impl Analysis {
    /// Relative dataset paths resolve against `base_dir`. `synthetic` forces
    /// the simulated stand-in, which is also used when the config names no
    /// dataset.
    pub fn new(cfg: RunConfig, base_dir: &Path, synthetic: bool) -> Result<Self> {
        cfg.validate()?;
        let (spec, fits) = cfg.prior.build()?;
        let (data, source) = match (synthetic, cfg.dataset_path(base_dir)) {
            (false, Some(path)) => {
                let unit = cfg.dataset.as_ref().map(|d| d.unit).unwrap_or_default();
                (load_dataset(&path, unit)?.data, DataSource::File { path })
            }
            _ => (synthetic_dataset(cfg.seed), DataSource::Synthetic { seed: cfg.seed }),
        };
        Ok(Self {
            cfg,
            spec,
            fits,
            data,
            source,
        })
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = (self.cfg.horizon / GRID_STEP).round() as usize;
        (0..=n).map(|k| (k as f64 * GRID_STEP).min(self.cfg.horizon)).collect()
    }

    /// Samples each family's prior at `n_draws`, keeping summaries, per-arm
    /// evidence and the leading draws needed for Hellinger distances.
    pub fn run_priors(&self, with_evidence: bool) -> Result<Vec<PriorRun>> {
        let keep = self.cfg.hellinger.n;
        let checkpoints = default_checkpoints(self.cfg.n_draws);
        self.cfg
            .families
            .iter()
            .map(|&family| {
                let started = Instant::now();
                let mut draws = sample_prior(family, &self.spec, self.cfg.n_draws, family_seed(self.cfg.seed, family))
                    .map_err(AppError::core("elicitation"))?;
                let evidence = if with_evidence {
                    let e = |arm| {
                        elicitsurv_core::compute_bme(&draws, &self.data, arm, &checkpoints)
                            .map_err(AppError::core("likelihood_evidence"))
                    };
                    Some([e(Arm::One)?, e(Arm::Two)?])
                } else {
                    None
                };
                let mean = |f| summarize(&draws.draws, f, &[]).ok().and_then(|v| v.into_iter().next());
                let means = [
                    mean(Functional::Mean { arm: Arm::One }),
                    mean(Functional::Mean { arm: Arm::Two }),
                    mean(Functional::IncrementalMean),
                ];
                let n_draws = draws.len();
                draws.draws.truncate(keep);
                Ok(PriorRun {
                    family,
                    n_draws,
                    means,
                    evidence,
                    draws,
                    seconds: started.elapsed().as_secs_f64(),
                })
            })
            .collect()
    }

    /// Prior model weights and posterior model probabilities per arm.
    pub fn weights(&self, runs: &[PriorRun]) -> Result<[ArmWeights; 2]> {
        let families: Vec<ModelFamily> = runs.iter().map(|r| r.family).collect();
        let per_arm = |arm: Arm| -> Result<ArmWeights> {
            let (distances, prior) = match self.cfg.scheme {
                SchemeConfig::Dilution => {
                    let models: Vec<&PriorDraws> = runs.iter().map(|r| &r.draws).collect();
                    let d = hellinger_matrix(&models, arm, &self.cfg.hellinger).map_err(AppError::core("model_weights"))?;
                    let w = dilution_prior(&d).map_err(AppError::core("model_weights"))?;
                    (Some(d), w)
                }
                SchemeConfig::Fixed(s) => (None, scheme_prior(s, &families).map_err(AppError::core("model_weights"))?),
            };
            let evidences: Option<Vec<EvidenceResult>> =
                runs.iter().map(|r| r.evidence.as_ref().map(|e| e[arm.index()].clone())).collect();
            let table = match evidences {
                Some(ev) => posterior_model_probs(&prior, &ev).map_err(AppError::core("model_weights"))?,
                None => prior,
            };
            Ok(ArmWeights { arm, distances, table })
        };
        Ok([per_arm(Arm::One)?, per_arm(Arm::Two)?])
    }

    pub fn posteriors(&self) -> Result<Vec<PosteriorRun>> {
        let grid = self.grid();
        self.cfg
            .families
            .iter()
            .map(|&family| {
                let started = Instant::now();
                let settings = MhSettings {
                    seed: family_seed(self.cfg.mh.seed, family),
                    ..self.cfg.mh
                };
                let draws = run_mh(family, &self.spec, &self.data, &settings).map_err(AppError::core("posterior_inference"))?;
                let stat = |f| summarize(&draws.draws, f, &[]).ok().and_then(|v| v.into_iter().next());
                let means = [
                    stat(Functional::Mean { arm: Arm::One }),
                    stat(Functional::Mean { arm: Arm::Two }),
                    stat(Functional::IncrementalMean),
                ];
                let survival = Arm::BOTH
                    .map(|arm| summarize(&draws.draws, Functional::Survival { arm }, &grid))
                    .into_iter()
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(AppError::core("posterior_inference"))?;
                Ok(PosteriorRun {
                    family,
                    means,
                    survival: [survival[0].clone(), survival[1].clone()],
                    draws,
                    seconds: started.elapsed().as_secs_f64(),
                })
            })
            .collect()
    }

    pub fn mle_fits(&self) -> Vec<IcRow> {
        let jobs: Vec<(ModelFamily, Arm)> =
            self.cfg.families.iter().flat_map(|&f| Arm::BOTH.map(|a| (f, a))).collect();
        let mut rows: Vec<IcRow> = jobs
            .par_iter()
            .map(|&(family, arm)| {
                let fit = mle_fit(family, &self.data, arm);
                let result = fit.and_then(|fit| information_criteria(&fit, self.cfg.bic_sample_size).map(|c| (fit, c)));
                IcRow {
                    family,
                    arm,
                    result: result.map_err(|e| e.to_string()),
                    rank_aic: None,
                    rank_bic: None,
                }
            })
            .collect();
        for arm in Arm::BOTH {
            for by_bic in [false, true] {
                let mut idx: Vec<usize> = (0..rows.len())
                    .filter(|&i| rows[i].arm == arm && rows[i].result.is_ok())
                    .collect();
                let key = |i: usize| {
                    let (_, c) = rows[i].result.as_ref().unwrap();
                    if by_bic {
                        c.bic
                    } else {
                        c.aic
                    }
                };
                idx.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
                for (rank, i) in idx.into_iter().enumerate() {
                    if by_bic {
                        rows[i].rank_bic = Some(rank + 1);
                    } else {
                        rows[i].rank_aic = Some(rank + 1);
                    }
                }
            }
        }
        rows
    }
}

#[derive(Debug, Clone)]
pub struct PriorRun {
    pub family: ModelFamily,
    /// Draws sampled, before truncation.
    pub n_draws: usize,
    /// Prior mean survival for arm 1, arm 2 and their difference.
    pub means: [Option<SummaryStat>; 3],
    pub evidence: Option<[EvidenceResult; 2]>,
    /// Sampler statistics with only the leading draws retained.
    pub draws: PriorDraws,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ArmWeights {
    pub arm: Arm,
    pub distances: Option<DistanceMatrix>,
    pub table: WeightTable,
}

#[derive(Debug, Clone)]
pub struct PosteriorRun {
    pub family: ModelFamily,
    pub means: [Option<SummaryStat>; 3],
    pub survival: [Vec<SummaryStat>; 2],
    pub draws: PosteriorDraws,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct IcRow {
    pub family: ModelFamily,
    pub arm: Arm,
    pub result: std::result::Result<(elicitsurv_core::MleFit, elicitsurv_core::Criteria), String>,
    pub rank_aic: Option<usize>,
    pub rank_bic: Option<usize>,
}

fn dist_params(d: &FittedDist) -> (&'static str, f64, &'static str, f64) {
    match *d {
        FittedDist::Beta { alpha, beta } | FittedDist::ScaledBeta { alpha, beta, .. } => ("alpha", alpha, "beta", beta),
        FittedDist::Normal { mean, sd } => ("mean", mean, "sd", sd),
        FittedDist::PointMass { value } => ("value", value, "", f64::NAN),
    }
}

pub fn dist_label(d: &FittedDist) -> String {
    match *d {
        FittedDist::Beta { alpha, beta } => format!("Beta({alpha:.2}, {beta:.2})"),
        FittedDist::Normal { mean, sd } => format!("N({mean:.3}, {sd:.3})"),
        FittedDist::ScaledBeta {
            alpha,
            beta,
            lower,
            upper,
        } => format!("Beta({alpha:.2}, {beta:.2}) on [{lower}, {upper}]"),
        FittedDist::PointMass { value } => format!("Point({value})"),
    }
}

pub fn table1(prior: &PriorConfig, fits: &[FitReport]) -> Table {
    let mut t = Table::new([
        "quantity", "q25", "q50", "q75", "distribution", "label", "param1_name", "param1", "param2_name", "param2",
        "residual", "converged",
    ]);
    for (q, fit) in prior.quantities.iter().zip(fits) {
        let (n1, p1, n2, p2) = dist_params(&fit.distribution);
        let kind = match fit.distribution {
            FittedDist::Beta { .. } => "beta",
            FittedDist::Normal { .. } => "normal",
            FittedDist::ScaledBeta { .. } => "scaled_beta",
            FittedDist::PointMass { .. } => "point",
        };
        t.push([
            q.name.to_string(),
            num(q.q25),
            num(q.q50),
            num(q.q75),
            kind.to_string(),
            dist_label(&fit.distribution),
            n1.to_string(),
            num(p1),
            n2.to_string(),
            if n2.is_empty() { String::new() } else { num(p2) },
            num(fit.residual),
            fit.converged.to_string(),
        ]);
    }
    t
}

pub fn prior_summary_table(runs: &[PriorRun]) -> Table {
    let mut t = Table::new([
        "family", "n", "acceptance_rate", "draw_efficiency", "attempts", "eligible", "most_violated", "mean_arm1",
        "lower_arm1", "upper_arm1", "mean_arm2", "lower_arm2", "upper_arm2", "mean_incremental", "lower_incremental",
        "upper_incremental",
    ]);
    for r in runs {
        let mut row = vec![
            r.family.to_string(),
            r.n_draws.to_string(),
            num(r.draws.acceptance_rate),
            num(r.draws.draw_efficiency),
            r.draws.attempts.to_string(),
            r.draws.eligible.to_string(),
            r.draws.most_violated().map(|c| c.to_string()).unwrap_or_default(),
        ];
        row.extend(stat_cells(&r.means));
        t.push(row);
    }
    t
}

pub fn rejection_table(runs: &[PriorRun]) -> Table {
    let mut t = Table::new(["family", "constraint", "rejections"]);
    for r in runs {
        for (c, n) in r.draws.rejection_counts() {
            t.push([r.family.to_string(), c.to_string(), n.to_string()]);
        }
    }
    t
}

fn stat_cells(stats: &[Option<SummaryStat>]) -> Vec<String> {
    stats
        .iter()
        .flat_map(|s| match s {
            Some(s) => [num(s.mean), num(s.lower), num(s.upper)],
            None => Default::default(),
        })
        .collect()
}

pub fn bme_table(runs: &[PriorRun]) -> Table {
    let mut t = Table::new(["family", "arm", "n_draws", "log_bme", "bme", "mc_standard_error", "ess"]);
    for r in runs {
        for e in r.evidence.iter().flatten() {
            t.push([
                r.family.to_string(),
                e.arm().map(|a| a.to_string()).unwrap_or_default(),
                e.n_draws.to_string(),
                num(e.log_bme),
                format_linear(e.log_bme),
                num(e.mc_standard_error),
                num(e.ess),
            ]);
        }
    }
    t
}

pub fn bme_trace_table(runs: &[PriorRun]) -> Table {
    let mut t = Table::new(["family", "arm", "n", "log_bme"]);
    for r in runs {
        for e in r.evidence.iter().flatten() {
            for p in &e.convergence_trace {
                t.push([
                    r.family.to_string(),
                    e.arm().map(|a| a.to_string()).unwrap_or_default(),
                    p.n.to_string(),
                    num(p.log_bme),
                ]);
            }
        }
    }
    t
}

pub fn hellinger_table(w: &[ArmWeights; 2]) -> Table {
    let families = w[0].table.families.clone();
    let mut header = vec!["arm".to_string(), "family".to_string()];
    header.extend(families.iter().map(|f| f.to_string()));
    header.push("row_sum".into());
    let mut t = Table::new(header);
    for aw in w {
        if let Some(d) = &aw.distances {
            for (i, f) in d.families.iter().enumerate() {
                let mut row = vec![aw.arm.to_string(), f.to_string()];
                row.extend(d.distances[i].iter().map(|&x| num(x)));
                row.push(num(d.row_sums[i]));
                t.push(row);
            }
        }
    }
    t
}

/// Prior weights, evidence and posterior model probabilities per arm.
pub fn table2(w: &[ArmWeights; 2]) -> Table {
    let mut t = Table::new([
        "arm", "family", "scheme", "row_sum", "prior_weight", "log_bme", "bme", "posterior_probability",
    ]);
    for aw in w {
        for (i, f) in aw.table.families.iter().enumerate() {
            let log_bme = aw.table.log_bme.as_ref().map(|v| v[i]);
            t.push([
                aw.arm.to_string(),
                f.to_string(),
                aw.table.scheme.to_string(),
                opt_num(aw.distances.as_ref().map(|d| d.row_sums[i])),
                num(aw.table.prior[i]),
                opt_num(log_bme),
                log_bme.map(format_linear).unwrap_or_default(),
                opt_num(aw.table.posterior.as_ref().map(|p| p[i])),
            ]);
        }
    }
    t
}

/// Every ordered pair of models per arm.
pub fn bayes_factor_table(runs: &[PriorRun]) -> Result<Table> {
    let mut t = Table::new(["arm", "model_i", "model_j", "log10_bf", "grade", "favours"]);
    for arm in Arm::BOTH {
        for ri in runs {
            for rj in runs {
                if ri.family == rj.family {
                    continue;
                }
                let (Some(ei), Some(ej)) = (&ri.evidence, &rj.evidence) else {
                    continue;
                };
                let bf = bayes_factor(&ei[arm.index()], &ej[arm.index()]).map_err(AppError::core("likelihood_evidence"))?;
                let favours = if bf.log10_bf >= 0.0 { ri.family } else { rj.family };
                t.push([
                    arm.to_string(),
                    ri.family.to_string(),
                    rj.family.to_string(),
                    num(bf.log10_bf),
                    bf.grade.to_string(),
                    favours.to_string(),
                ]);
            }
        }
    }
    Ok(t)
}

/// Prior and posterior mean survival with 95% intervals.
pub fn table3(priors: &[PriorRun], posts: &[PosteriorRun]) -> Table {
    let mut header = vec!["family".to_string()];
    for stage in ["prior", "posterior"] {
        for what in ["arm1", "arm2", "incremental"] {
            for s in ["mean", "lower", "upper"] {
                header.push(format!("{stage}_{s}_{what}"));
            }
        }
    }
    header.extend(["max_rhat".into(), "mh_acceptance".into()]);
    let mut t = Table::new(header);
    for p in posts {
        let prior = priors.iter().find(|r| r.family == p.family).map(|r| r.means).unwrap_or_default();
        let mut row = vec![p.family.to_string()];
        row.extend(stat_cells(&prior));
        row.extend(stat_cells(&p.means));
        let rhat = p.draws.diagnostics.iter().map(|d| d.rhat).fold(f64::NAN, f64::max);
        let acc = p.draws.acceptance_rates.iter().sum::<f64>() / p.draws.acceptance_rates.len().max(1) as f64;
        row.extend([num(rhat), num(acc)]);
        t.push(row);
    }
    t
}

pub fn posterior_survival_table(posts: &[PosteriorRun]) -> Table {
    let mut t = Table::new(["family", "arm", "t", "mean", "lower", "upper"]);
    for p in posts {
        for (arm, stats) in Arm::BOTH.iter().zip(&p.survival) {
            for s in stats {
                t.push([
                    p.family.to_string(),
                    arm.to_string(),
                    opt_num(s.t),
                    num(s.mean),
                    num(s.lower),
                    num(s.upper),
                ]);
            }
        }
    }
    t
}

pub fn diagnostics_table(posts: &[PosteriorRun]) -> Table {
    let mut t = Table::new(["family", "parameter", "rhat"]);
    for p in posts {
        for d in &p.draws.diagnostics {
            t.push([p.family.to_string(), d.name.clone(), num(d.rhat)]);
        }
    }
    t
}

pub fn km_table(data: &SurvivalDataset) -> Result<Table> {
    let mut t = Table::new(["arm", "time", "at_risk", "events", "survival"]);
    for arm in Arm::BOTH {
        let km = kaplan_meier(data, arm).map_err(AppError::core("nonparametric"))?;
        for k in 0..km.times.len() {
            t.push([
                arm.to_string(),
                num(km.times[k]),
                km.at_risk[k].to_string(),
                km.events[k].to_string(),
                num(km.survival[k]),
            ]);
        }
    }
    Ok(t)
}

pub fn hazard_table(data: &SurvivalDataset, bin_width: f64) -> Result<Table> {
    let mut t = Table::new(["arm", "start", "end", "events", "person_time", "hazard", "lower", "upper"]);
    for arm in Arm::BOTH {
        let h = empirical_hazard(data, arm, bin_width).map_err(AppError::core("nonparametric"))?;
        for k in 0..h.hazard.len() {
            t.push([
                arm.to_string(),
                num(h.edges[k]),
                num(h.edges[k + 1]),
                h.events[k].to_string(),
                num(h.person_time[k]),
                num(h.hazard[k]),
                opt_num(h.lower[k]),
                opt_num(h.upper[k]),
            ]);
        }
    }
    Ok(t)
}

pub fn ic_table(rows: &[IcRow]) -> Table {
    let mut t = Table::new([
        "family", "arm", "n_params", "n", "n_events", "log_likelihood", "aic", "bic", "rank_aic", "rank_bic", "params",
        "converged", "error",
    ]);
    for r in rows {
        let mut row = vec![r.family.to_string(), r.arm.to_string()];
        match &r.result {
            Ok((fit, c)) => {
                let (v, n) = fit.params.values();
                let params = v[..n].iter().map(|&x| num(x)).collect::<Vec<_>>().join(";");
                row.extend([
                    fit.n_params.to_string(),
                    fit.n.to_string(),
                    fit.n_events.to_string(),
                    num(fit.log_likelihood),
                    num(c.aic),
                    num(c.bic),
                    r.rank_aic.map(|x| x.to_string()).unwrap_or_default(),
                    r.rank_bic.map(|x| x.to_string()).unwrap_or_default(),
                    params,
                    fit.converged.to_string(),
                    String::new(),
                ]);
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 10));
                row.push(e.clone());
            }
        }
        t.push(row);
    }
    t
}

fn km_series(data: &SurvivalDataset, arm: Arm, color: usize) -> Result<Series> {
    let km = kaplan_meier(data, arm).map_err(AppError::core("nonparametric"))?;
    let t_max = data.arm(arm).times.iter().copied().fold(0.0, f64::max);
    let mut points = vec![(0.0, 1.0)];
    points.extend(km.times.iter().copied().zip(km.survival.iter().copied()));
    points.push((t_max, *km.survival.last().unwrap_or(&1.0)));
    Ok(Series {
        name: format!("KM arm {arm}"),
        points,
        kind: SeriesKind::Step,
        color,
    })
}

/// Kaplan-Meier curves with posterior expected survival overlaid.
pub fn fig_km(data: &SurvivalDataset, posts: &[PosteriorRun], horizon: f64) -> Result<Chart> {
    let mut series = Vec::new();
    for arm in Arm::BOTH {
        let mut s = km_series(data, arm, 7)?;
        if arm == Arm::Two {
            s.color = 5;
        }
        series.push(s);
    }
    for (k, p) in posts.iter().enumerate() {
        for (arm, stats) in Arm::BOTH.iter().zip(&p.survival) {
            series.push(Series {
                name: format!("{} arm {arm}", p.family),
                points: stats.iter().filter_map(|s| Some((s.t?, s.mean))).collect(),
                kind: if *arm == Arm::One { SeriesKind::Line } else { SeriesKind::Dashed },
                color: k,
            });
        }
    }
    let t_max = data.records().iter().map(|r| r.time).fold(0.0, f64::max);
    Ok(Chart {
        title: "Kaplan-Meier and posterior expected survival".into(),
        x_label: "years".into(),
        y_label: "survival".into(),
        x_range: (0.0, if posts.is_empty() { t_max.ceil() } else { horizon }),
        y_range: (0.0, 1.0),
        series,
    })
}

pub fn fig_hazard(data: &SurvivalDataset, bin_width: f64) -> Result<Chart> {
    let mut series = Vec::new();
    let mut y_max: f64 = 0.0;
    for arm in Arm::BOTH {
        let h = empirical_hazard(data, arm, bin_width).map_err(AppError::core("nonparametric"))?;
        let mid: Vec<f64> = h.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let bars: Vec<(f64, f64, f64)> = (0..h.hazard.len())
            .filter_map(|k| Some((mid[k], h.lower[k]?, h.upper[k]?)))
            .collect();
        y_max = bars.iter().map(|b| b.2).fold(y_max, f64::max);
        let color = arm.index();
        let mut points = Vec::new();
        for k in 0..h.hazard.len() {
            points.push((h.edges[k], h.hazard[k]));
        }
        points.push((*h.edges.last().unwrap(), *h.hazard.last().unwrap_or(&0.0)));
        series.push(Series {
            name: format!("hazard arm {arm}"),
            points,
            kind: SeriesKind::Step,
            color,
        });
        series.push(Series {
            name: format!("95% CI arm {arm}"),
            points: Vec::new(),
            kind: SeriesKind::Intervals { bars },
            color,
        });
    }
    let t_max = data.records().iter().map(|r| r.time).fold(0.0, f64::max);
    Ok(Chart {
        title: "Empirical hazard".into(),
        x_label: "years".into(),
        y_label: "events per person-year".into(),
        x_range: (0.0, (t_max / bin_width).ceil() * bin_width),
        y_range: (0.0, if y_max > 0.0 { y_max * 1.05 } else { 1.0 }),
        series,
    })
}

pub fn fig_bme_trace(runs: &[PriorRun]) -> Chart {
    let mut series = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut n_max = 1.0f64;
    for (k, r) in runs.iter().enumerate() {
        for e in r.evidence.iter().flatten() {
            let points: Vec<(f64, f64)> =
                e.convergence_trace.iter().map(|p| ((p.n as f64).log10(), p.log_bme)).collect();
            for p in &points {
                lo = lo.min(p.1);
                hi = hi.max(p.1);
                n_max = n_max.max(p.0);
            }
            let arm = e.arm().unwrap_or(Arm::One);
            series.push(Series {
                name: format!("{} arm {arm}", r.family),
                points,
                kind: if arm == Arm::One { SeriesKind::Line } else { SeriesKind::Dashed },
                color: k,
            });
        }
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1.0);
    Chart {
        title: "Evidence convergence".into(),
        x_label: "log10 draws".into(),
        y_label: "ln BME".into(),
        x_range: (3.0f64.min(n_max), n_max.max(3.0) + 0.1),
        y_range: (lo - pad, hi + pad),
        series,
    }
}

/// Prior and posterior survival bands of the most probable model per arm,
/// against the Kaplan-Meier estimate.
pub fn fig_survival(a: &Analysis, priors: &[PriorRun], posts: &[PosteriorRun], w: &[ArmWeights; 2]) -> Result<Chart> {
    let grid = a.grid();
    let mut series = Vec::new();
    for aw in w {
        let arm = aw.arm;
        let probs = aw.table.posterior.as_ref().unwrap_or(&aw.table.prior);
        let best = (0..probs.len()).max_by(|&i, &j| probs[i].total_cmp(&probs[j])).map(|i| aw.table.families[i]);
        let Some(best) = best else { continue };
        let c = arm.index() * 2;
        if let Some(p) = priors.iter().find(|r| r.family == best) {
            let s = summarize(&p.draws.draws, Functional::Survival { arm }, &grid).map_err(AppError::core("posterior_inference"))?;
            series.push(band(format!("prior {best} arm {arm}"), &s, c + 1));
        }
        if let Some(p) = posts.iter().find(|r| r.family == best) {
            let s = &p.survival[arm.index()];
            series.push(band(format!("posterior {best} arm {arm}"), s, c));
            series.push(Series {
                name: format!("posterior mean arm {arm}"),
                points: s.iter().filter_map(|x| Some((x.t?, x.mean))).collect(),
                kind: SeriesKind::Line,
                color: c,
            });
        }
        series.push(km_series(&a.data, arm, c)?);
    }
    Ok(Chart {
        title: "Prior and posterior survival, most probable model".into(),
        x_label: "years".into(),
        y_label: "survival".into(),
        x_range: (0.0, a.cfg.horizon),
        y_range: (0.0, 1.0),
        series,
    })
}

fn band(name: String, s: &[SummaryStat], color: usize) -> Series {
    Series {
        name,
        points: s.iter().filter_map(|x| Some((x.t?, x.lower))).collect(),
        kind: SeriesKind::Band {
            upper: s.iter().filter_map(|x| Some((x.t?, x.upper))).collect(),
        },
        color,
    }
}

/// Files produced by a run, keyed by file name.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn table(&mut self, stem: &str, t: &Table) {
        self.files.insert(format!("{stem}.csv"), t.to_csv().into_bytes());
    }

    pub fn chart(&mut self, stem: &str, c: &Chart) {
        self.files.insert(format!("{stem}.svg"), c.to_svg().into_bytes());
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) {
        let mut s = serde_json::to_string_pretty(value).expect("serializable");
        s.push('\n');
        self.files.insert(name.into(), s.into_bytes());
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(Vec::as_slice)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    /// Writes every file atomically into `dir`; returns the paths written.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(AppError::io(dir))?;
        self.files
            .iter()
            .map(|(name, bytes)| {
                let path = dir.join(name);
                write_atomic(&path, bytes)?;
                Ok(path)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub step: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub paths: Vec<PathBuf>,
    pub seed: u64,
    pub version: &'static str,
    pub data: DataSource,
    pub families: Vec<ModelFamily>,
    pub n_draws: usize,
    pub scheme: String,
    pub timings: Vec<Timing>,
    pub warnings: Vec<String>,
}

/// Runs every step and collects the report files.
pub fn report(a: &Analysis) -> Result<(Artifacts, ReportBundle)> {
    let mut out = Artifacts::default();
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |step: &str, timings: &mut Vec<Timing>| {
        timings.push(Timing {
            step: step.into(),
            seconds: clock.elapsed().as_secs_f64(),
        });
        clock = Instant::now();
    };

    out.table("table1", &table1(&a.cfg.prior, &a.fits));
    lap("fit_prior", &mut timings);

    let priors = a.run_priors(true)?;
    out.table("prior_summary", &prior_summary_table(&priors));
    out.table("prior_rejections", &rejection_table(&priors));
    out.table("bme", &bme_table(&priors));
    out.table("bme_trace", &bme_trace_table(&priors));
    out.chart("fig_bme_trace", &fig_bme_trace(&priors));
    out.table("bayes_factors", &bayes_factor_table(&priors)?);
    lap("sample_prior_and_bme", &mut timings);

    let weights = a.weights(&priors)?;
    out.table("table2", &table2(&weights));
    if weights.iter().any(|w| w.distances.is_some()) {
        out.table("hellinger", &hellinger_table(&weights));
    }
    lap("weights", &mut timings);

    let posts = a.posteriors()?;
    out.table("table3", &table3(&priors, &posts));
    out.table("posterior_survival", &posterior_survival_table(&posts));
    out.table("mh_diagnostics", &diagnostics_table(&posts));
    lap("posterior", &mut timings);

    out.table("km", &km_table(&a.data)?);
    out.table("hazard", &hazard_table(&a.data, a.cfg.hazard_bin_width)?);
    out.chart("fig_km", &fig_km(&a.data, &posts, a.cfg.horizon)?);
    out.chart("fig_hazard", &fig_hazard(&a.data, a.cfg.hazard_bin_width)?);
    out.chart("fig_survival", &fig_survival(a, &priors, &posts, &weights)?);
    lap("nonparametric", &mut timings);

    out.table("ic", &ic_table(&a.mle_fits()));
    lap("information_criteria", &mut timings);

    let warnings = posts
        .iter()
        .flat_map(|p| p.draws.warnings.iter().map(move |w| format!("{}: {w}", p.family)))
        .collect();
    let bundle = ReportBundle {
        paths: Vec::new(),
        seed: a.cfg.seed,
        version: env!("CARGO_PKG_VERSION"),
        data: a.source.clone(),
        families: a.cfg.families.clone(),
        n_draws: a.cfg.n_draws,
        scheme: a.cfg.scheme.to_string(),
        timings,
        warnings,
    };
    Ok((out, bundle))
}

/// Runs the report and writes it, with `report.json` listing every file.
pub fn write_report(a: &Analysis, dir: &Path) -> Result<ReportBundle> {
    let (out, mut bundle) = report(a)?;
    bundle.paths = out.names().map(|n| dir.join(n)).collect();
    bundle.paths.push(dir.join("report.json"));
    out.save(dir)?;
    let mut meta = Artifacts::default();
    meta.json("report.json", &bundle);
    meta.save(dir)?;
    Ok(bundle)
}
