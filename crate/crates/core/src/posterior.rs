//! Posterior sampling over the elicited quantities and posterior summaries.
//!
//! The sampler is an adaptive random-walk Metropolis algorithm on the
//! elicited quantities mapped to unbounded coordinates (log-odds for
//! quantities with bounded support, identity for a normal difference). Both
//! arms are sampled jointly. Proposal shape and scale adapt during burn-in and
//! are frozen afterwards.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{Arm, ArmSample, SurvivalDataset};
use crate::elicitation::{
    chunk_rng, constrained_params, sample_prior_with, survival_points, FittedDist, PriorDraw, PriorDraws,
    PriorSpec, SamplerOptions,
};
use crate::error::{Error, Result};
use crate::evidence::log_likelihood_sample;
use crate::math;
use crate::models::{ModelFamily, ModelParams};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct MhSettings {
    pub chains: usize,
    /// Iterations per chain, including burn-in.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Prior draws scored per chain to pick its starting point.
    pub init_candidates: usize,
    pub target_acceptance: f64,
}

impl Default for MhSettings {
    fn default() -> Self {
        Self {
            chains: 4,
            iterations: 50_000,
            burn_in: 10_000,
            thin: 4,
            seed: 0,
            init_candidates: 200,
            target_acceptance: 0.3,
        }
    }
}

impl MhSettings {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.thin == 0 || self.init_candidates == 0 {
            return Err(Error::Validation("chains, thin and init_candidates must be >= 1".into()));
        }
        if self.iterations <= self.burn_in {
            return Err(Error::Validation(format!(
                "iterations ({}) must exceed burn_in ({})",
                self.iterations, self.burn_in
            )));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::Validation("target_acceptance must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamDiagnostic {
    /// e.g. `arm1.shape`.
    pub name: String,
    /// Split-chain potential scale reduction.
    pub rhat: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PosteriorDraws {
    pub family: ModelFamily,
    /// Retained draws, chain by chain.
    pub draws: Vec<PriorDraw>,
    pub chains: usize,
    pub draws_per_chain: usize,
    pub acceptance_rates: Vec<f64>,
    pub diagnostics: Vec<ParamDiagnostic>,
    /// Non-fatal convergence warnings.
    pub warnings: Vec<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
enum Coord {
    /// `q = lo + width * sigmoid(z)`.
    Logit { lo: f64, width: f64 },
    Identity,
}

impl Coord {
    fn to_unbounded(self, q: f64) -> f64 {
        match self {
            Coord::Logit { lo, width } => math::logit((q - lo) / width),
            Coord::Identity => q,
        }
    }

    /// Returns `(q, ln |dq/dz|)`.
    fn to_bounded(self, z: f64) -> (f64, f64) {
        match self {
            Coord::Logit { lo, width } => {
                let u = math::sigmoid(z);
                // ln(u (1 - u)) = -ln(1 + e^-z) - ln(1 + e^z)
                let ln_jac = math::ln(width) - math::ln_1p_exp(-z) - math::ln_1p_exp(z);
                (lo + width * u, ln_jac)
            }
            Coord::Identity => (z, 0.0),
        }
    }
}

struct Target<'a> {
    family: ModelFamily,
    spec: &'a PriorSpec,
    dists: [FittedDist; 4],
    /// Indices of quantities that are not point masses.
    free: Vec<usize>,
    coords: Vec<Coord>,
    samples: [ArmSample; 2],
}

#[derive(Clone, Copy)]
struct State {
    q: [f64; 4],
    arms: [ModelParams; 2],
    ln_target: f64,
}

impl<'a> Target<'a> {
    fn new(family: ModelFamily, spec: &'a PriorSpec, data: &SurvivalDataset) -> Result<Self> {
        let dists = spec.distributions()?;
        let mut free = Vec::new();
        let mut coords = Vec::new();
        for (i, d) in dists.iter().enumerate() {
            let c = match *d {
                FittedDist::PointMass { .. } => continue,
                FittedDist::Beta { .. } => Coord::Logit { lo: 0.0, width: 1.0 },
                FittedDist::ScaledBeta { lower, upper, .. } => Coord::Logit {
                    lo: lower,
                    width: upper - lower,
                },
                FittedDist::Normal { .. } => Coord::Identity,
            };
            free.push(i);
            coords.push(c);
        }
        Ok(Self {
            family,
            spec,
            dists,
            free,
            coords,
            samples: [data.arm(Arm::One), data.arm(Arm::Two)],
        })
    }

    fn base(&self) -> [f64; 4] {
        let mut q = [0.0; 4];
        for (i, d) in self.dists.iter().enumerate() {
            q[i] = d.mean();
        }
        q
    }

    fn to_z(&self, q: &[f64; 4]) -> Vec<f64> {
        self.free
            .iter()
            .zip(&self.coords)
            .map(|(&i, c)| c.to_unbounded(q[i]))
            .collect()
    }

    fn eval(&self, z: &[f64]) -> Option<State> {
        let mut q = self.base();
        let mut ln_t = 0.0;
        for ((&i, c), &zi) in self.free.iter().zip(&self.coords).zip(z) {
            let (qi, ln_jac) = c.to_bounded(zi);
            q[i] = qi;
            ln_t += ln_jac + self.dists[i].ln_pdf(qi);
        }
        if !ln_t.is_finite() {
            return None;
        }
        let arms = constrained_params(self.family, self.spec, &q).ok()?;
        for (p, s) in arms.iter().zip(&self.samples) {
            ln_t += log_likelihood_sample(p, s);
        }
        if ln_t.is_nan() || ln_t == f64::NEG_INFINITY {
            return None;
        }
        Some(State {
            q,
            arms,
            ln_target: ln_t,
        })
    }
}

/// Lower-triangular Cholesky factor of a small SPD matrix, or `None`.
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i][i] = math::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Running mean and covariance.
struct Moments {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<Vec<f64>>,
}

impl Moments {
    fn new(d: usize) -> Self {
        Self {
            n: 0.0,
            mean: vec![0.0; d],
            m2: vec![vec![0.0; d]; d],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1.0;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for (m, d) in self.mean.iter_mut().zip(&delta) {
            *m += d / self.n;
        }
        for i in 0..x.len() {
            for j in 0..x.len() {
                self.m2[i][j] += delta[i] * (x[j] - self.mean[j]);
            }
        }
    }

    fn covariance(&self) -> Vec<Vec<f64>> {
        let denom = (self.n - 1.0).max(1.0);
        self.m2
            .iter()
            .map(|r| r.iter().map(|v| v / denom).collect())
            .collect()
    }
}

const ADAPT_START: usize = 500;
const ADAPT_EVERY: usize = 100;

struct ChainOutput {
    draws: Vec<PriorDraw>,
    acceptance: f64,
}

fn run_chain(target: &Target<'_>, settings: &MhSettings, chain: usize) -> Result<ChainOutput> {
    let d = target.free.len();
    let keep = (settings.iterations - settings.burn_in) / settings.thin;
    let chain_seed = settings
        .seed
        .wrapping_add((chain as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));

    let candidates = sample_prior_with(
        target.family,
        target.spec,
        settings.init_candidates,
        chain_seed,
        &SamplerOptions {
            chunk_size: 1024,
            ..SamplerOptions::default()
        },
    )?;
    let mut best: Option<(Vec<f64>, State)> = None;
    let mut spread = Moments::new(d);
    for cand in &candidates.draws {
        let z = target.to_z(&cand.quantities);
        spread.push(&z);
        if let Some(s) = target.eval(&z) {
            if best.as_ref().is_none_or(|b| s.ln_target > b.1.ln_target) {
                best = Some((z, s));
            }
        }
    }
    let (mut z, mut state) = best.ok_or(Error::ZeroEvidence)?;

    if d == 0 {
        let draw = PriorDraw {
            quantities: state.q,
            survival: survival_points(&state.q),
            arms: state.arms,
        };
        return Ok(ChainOutput {
            draws: vec![draw; keep],
            acceptance: 1.0,
        });
    }

    let mut chol = {
        let mut cov = spread.covariance();
        for (i, row) in cov.iter_mut().enumerate() {
            row[i] += 1e-8;
        }
        cholesky(&cov).unwrap_or_else(|| {
            (0..d)
                .map(|i| (0..d).map(|j| if i == j { 0.1 } else { 0.0 }).collect())
                .collect()
        })
    };
    let mut ln_scale = math::ln(2.38 / math::sqrt(d as f64));
    let mut rng = chunk_rng(chain_seed, 1 << 32);
    let mut history = Moments::new(d);
    let mut accepted_after_burn = 0usize;
    let mut draws = Vec::with_capacity(keep);
    let mut eps = vec![0.0; d];
    let mut proposal = vec![0.0; d];

    for it in 0..settings.iterations {
        for e in eps.iter_mut() {
            *e = StandardNormal.sample(&mut rng);
        }
        let scale = math::exp(ln_scale);
        for i in 0..d {
            let step: f64 = (0..=i).map(|k| chol[i][k] * eps[k]).sum();
            proposal[i] = z[i] + scale * step;
        }
        let u: f64 = rng.random();
        let mut accept_prob = 0.0;
        if let Some(next) = target.eval(&proposal) {
            let ln_ratio = next.ln_target - state.ln_target;
            accept_prob = if ln_ratio >= 0.0 { 1.0 } else { math::exp(ln_ratio) };
            if math::ln(u) < ln_ratio {
                z.copy_from_slice(&proposal);
                state = next;
                if it >= settings.burn_in {
                    accepted_after_burn += 1;
                }
            }
        }

        if it < settings.burn_in {
            let gain = 1.0 / libm::pow((it + 1) as f64, 0.6);
            ln_scale += gain * (accept_prob - settings.target_acceptance);
            history.push(&z);
            if it + 1 >= ADAPT_START && (it + 1) % ADAPT_EVERY == 0 {
                let mut cov = history.covariance();
                for (i, row) in cov.iter_mut().enumerate() {
                    row[i] += 1e-10;
                }
                if let Some(l) = cholesky(&cov) {
                    chol = l;
                    // Rescale relative to the new shape.
                    ln_scale = ln_scale.max(math::ln(0.1 / math::sqrt(d as f64)));
                }
            }
        } else if (it - settings.burn_in + 1) % settings.thin == 0 && draws.len() < keep {
            draws.push(PriorDraw {
                quantities: state.q,
                survival: survival_points(&state.q),
                arms: state.arms,
            });
        }
    }
    Ok(ChainOutput {
        draws,
        acceptance: accepted_after_burn as f64 / (settings.iterations - settings.burn_in) as f64,
    })
}

/// Split-chain potential scale reduction for equal-length chains.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let half = chains.iter().map(|c| c.len() / 2).min().unwrap_or(0);
    if half < 2 {
        return f64::NAN;
    }
    let parts: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..half], &c[c.len() - half..]])
        .collect();
    let m = parts.len() as f64;
    let n = half as f64;
    let means: Vec<f64> = parts.iter().map(|p| p.iter().sum::<f64>() / n).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n / (m - 1.0) * means.iter().map(|x| (x - grand) * (x - grand)).sum::<f64>();
    let w = parts
        .iter()
        .zip(&means)
        .map(|(p, mu)| p.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    math::sqrt(var_plus / w)
}

/// Posterior draws of both arms' parameters given the prior spec and data.
///
/// Arms without records contribute a flat likelihood, so an empty dataset
/// samples the constrained prior.
pub fn run_mh(family: ModelFamily, spec: &PriorSpec, data: &SurvivalDataset, settings: &MhSettings) -> Result<PosteriorDraws> {
    settings.validate()?;
    let target = Target::new(family, spec, data)?;
    let outputs = par::map_indices(settings.chains, |c| run_chain(&target, settings, c));
    let outputs: Vec<ChainOutput> = outputs.into_iter().collect::<Result<_>>()?;
    let draws_per_chain = outputs[0].draws.len();

    let mut diagnostics = Vec::new();
    let mut warnings = Vec::new();
    for arm in Arm::BOTH {
        for (k, pname) in family.param_names().iter().enumerate() {
            let series: Vec<Vec<f64>> = outputs
                .iter()
                .map(|o| o.draws.iter().map(|d| d.arms[arm.index()].values().0[k]).collect())
                .collect();
            let rhat = split_rhat(&series);
            let name = format!("arm{}.{}", arm.number(), pname);
            if rhat > 1.1 {
                warnings.push(format!("{name}: split R-hat {rhat:.3} exceeds 1.1"));
            }
            diagnostics.push(ParamDiagnostic { name, rhat });
        }
    }

    Ok(PosteriorDraws {
        family,
        acceptance_rates: outputs.iter().map(|o| o.acceptance).collect(),
        draws: outputs.into_iter().flat_map(|o| o.draws).collect(),
        chains: settings.chains,
        draws_per_chain,
        diagnostics,
        warnings,
        seed: settings.seed,
    })
}

/// Quantity summarised per draw.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Functional {
    /// Survival probability at each time of the grid.
    Survival { arm: Arm },
    Mean { arm: Arm },
    Median { arm: Arm },
    /// Arm 2 mean minus arm 1 mean, per joint draw.
    IncrementalMean,
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Survival { arm } => write!(f, "survival[arm {arm}]"),
            Functional::Mean { arm } => write!(f, "mean[arm {arm}]"),
            Functional::Median { arm } => write!(f, "median[arm {arm}]"),
            Functional::IncrementalMean => f.write_str("incremental_mean"),
        }
    }
}

impl Functional {
    fn eval(&self, d: &PriorDraw, t: f64) -> Option<f64> {
        let v = match *self {
            Functional::Survival { arm } => d.arms[arm.index()].survival(t).ok(),
            Functional::Mean { arm } => d.arms[arm.index()].mean_survival().ok(),
            Functional::Median { arm } => d.arms[arm.index()].median_survival().ok(),
            Functional::IncrementalMean => {
                let m1 = d.arms[0].mean_survival().ok()?;
                let m2 = d.arms[1].mean_survival().ok()?;
                Some(m2 - m1)
            }
        }?;
        v.is_finite().then_some(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SummaryStat {
    pub functional: Functional,
    /// Grid time for survival summaries.
    pub t: Option<f64>,
    /// Sample mean over draws where the functional is defined.
    pub mean: f64,
    /// 2.5th percentile.
    pub lower: f64,
    /// 97.5th percentile.
    pub upper: f64,
    pub undefined_fraction: f64,
    pub n: usize,
}

fn summarize_at(draws: &[PriorDraw], functional: Functional, t: f64) -> Result<SummaryStat> {
    if draws.is_empty() {
        return Err(Error::DegeneratePrior);
    }
    let mut values: Vec<f64> = draws.iter().filter_map(|d| functional.eval(d, t)).collect();
    let undefined_fraction = 1.0 - values.len() as f64 / draws.len() as f64;
    if values.is_empty() || undefined_fraction > 0.5 {
        return Err(Error::Unsummarizable { undefined_fraction });
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.sort_by(f64::total_cmp);
    Ok(SummaryStat {
        functional,
        t: matches!(functional, Functional::Survival { .. }).then_some(t),
        mean,
        lower: math::quantile_sorted(&values, 0.025),
        upper: math::quantile_sorted(&values, 0.975),
        undefined_fraction,
        n: values.len(),
    })
}

/// Mean and equal-tailed 95% interval of `functional` over `draws`. Survival
/// summaries are returned per grid time; the others ignore `grid`.
pub fn summarize(draws: &[PriorDraw], functional: Functional, grid: &[f64]) -> Result<Vec<SummaryStat>> {
    match functional {
        Functional::Survival { .. } => grid.iter().map(|&t| summarize_at(draws, functional, t)).collect(),
        _ => Ok(vec![summarize_at(draws, functional, f64::NAN)?]),
    }
}

pub fn posterior_summary(draws: &PosteriorDraws, functional: Functional, grid: &[f64]) -> Result<Vec<SummaryStat>> {
    summarize(&draws.draws, functional, grid)
}

/// Self-normalised importance-sampling posterior estimates from prior draws.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SnisResult {
    pub family: ModelFamily,
    pub arm: Arm,
    /// Normalised weights, one per prior draw.
    pub weights: Vec<f64>,
    pub effective_sample_size: f64,
    pub n: usize,
    /// `(t, E[S(t) | D])` for each grid time.
    pub survival: Vec<(f64, f64)>,
    /// `E[mean survival | D]`, over draws with a defined mean.
    pub mean_survival: Option<f64>,
    /// `ESS / N < 0.01`.
    pub unreliable: bool,
}

impl SnisResult {
    /// Weighted posterior expectation of `f` over the same prior draws.
    pub fn expectation<F: Fn(&PriorDraw) -> f64>(&self, prior: &PriorDraws, f: F) -> f64 {
        prior.draws.iter().zip(&self.weights).map(|(d, w)| w * f(d)).sum()
    }
}

pub fn snis_check(prior: &PriorDraws, data: &SurvivalDataset, arm: Arm, grid: &[f64]) -> Result<SnisResult> {
    if prior.is_empty() {
        return Err(Error::DegeneratePrior);
    }
    let sample = data.arm(arm);
    let lls: Vec<f64> = prior
        .draws
        .iter()
        .map(|d| log_likelihood_sample(&d.arms[arm.index()], &sample))
        .collect();
    let max = lls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::ZeroEvidence);
    }
    let raw: Vec<f64> = lls.iter().map(|l| math::exp(l - max)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let ess = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
    let n = prior.len();

    let survival = grid
        .iter()
        .map(|&t| {
            let e = prior
                .draws
                .iter()
                .zip(&weights)
                .map(|(d, w)| w * math::exp(d.arms[arm.index()].ln_survival_unchecked(t)))
                .sum();
            (t, e)
        })
        .collect();
    let (mut wm, mut wsum) = (0.0, 0.0);
    for (d, w) in prior.draws.iter().zip(&weights) {
        if let Ok(m) = d.arms[arm.index()].mean_survival() {
            wm += w * m;
            wsum += w;
        }
    }
    Ok(SnisResult {
        family: prior.family,
        arm,
        weights,
        effective_sample_size: ess,
        n,
        survival,
        mean_survival: (wsum > 0.0).then(|| wm / wsum),
        unreliable: ess / (n as f64) < 0.01,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhat_of_identical_chains_is_near_one() {
        let c: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64).collect();
        let r = split_rhat(&[c.clone(), c.clone(), c]);
        assert!((r - 1.0).abs() < 0.01, "{r}");
    }

    #[test]
    fn rhat_flags_separated_chains() {
        let a: Vec<f64> = (0..500).map(|i| (i % 10) as f64).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 100.0).collect();
        assert!(split_rhat(&[a, b]) > 1.1);
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = vec![vec![4.0, 2.0, 0.4], vec![2.0, 3.0, 0.5], vec![0.4, 0.5, 1.0]];
        let l = cholesky(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| l[i][k] * l[j][k]).sum();
                assert!((v - a[i][j]).abs() < 1e-12);
            }
        }
        assert!(cholesky(&[vec![-1.0]]).is_none());
    }

    #[test]
    fn logit_coordinate_round_trip() {
        let c = Coord::Logit { lo: -0.5, width: 1.0 };
        let z = c.to_unbounded(0.2);
        let (q, jac) = c.to_bounded(z);
        assert!((q - 0.2).abs() < 1e-14);
        let u: f64 = 0.7;
        assert!((jac - (u * (1.0 - u)).ln()).abs() < 1e-12);
    }

    #[test]
    fn identical_draws_summarise_exactly() {
        let d = PriorDraw {
            quantities: [0.4, 0.1, 0.05, 0.1],
            survival: [[0.4, 0.3], [0.45, 0.35]],
            arms: [ModelParams::Exponential { rate: 0.2 }, ModelParams::Exponential { rate: 0.1 }],
        };
        let draws = vec![d; 50];
        let s = summarize(&draws, Functional::Mean { arm: Arm::One }, &[]).unwrap();
        assert_eq!((s[0].mean, s[0].lower, s[0].upper), (5.0, 5.0, 5.0));
        let s = summarize(&draws, Functional::IncrementalMean, &[]).unwrap();
        assert_eq!(s[0].mean, 5.0);
    }

    #[test]
    fn undefined_majority_is_unsummarizable() {
        let d = |shape| PriorDraw {
            quantities: [0.4, 0.1, 0.05, 0.1],
            survival: [[0.4, 0.3], [0.45, 0.35]],
            arms: [ModelParams::LogLogistic { shape, scale: 5.0 }; 2],
        };
        let draws = vec![d(0.8), d(0.9), d(2.0)];
        assert!(matches!(
            summarize(&draws, Functional::Mean { arm: Arm::One }, &[]),
            Err(Error::Unsummarizable { .. })
        ));
        let draws = vec![d(0.8), d(2.0), d(2.0)];
        let s = summarize(&draws, Functional::Mean { arm: Arm::One }, &[]).unwrap();
        assert!((s[0].undefined_fraction - 1.0 / 3.0).abs() < 1e-15);
    }
}
