//! Censored log-likelihood, Monte Carlo model evidence and Bayes factors.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::data::{Arm, ArmSample, SurvivalDataset};
use crate::elicitation::{PriorDraw, PriorDraws};
use crate::error::{Error, Result};
use crate::math::{self, LogSumExp};
use crate::models::{ModelFamily, ModelParams};
use crate::par;

const LN_10: f64 = core::f64::consts::LN_10;
const CHUNK: usize = 4096;

/// `sum_i d_i ln h(t_i) + ln S(t_i)` over one arm's records.
///
/// Returns `-inf` when any record is impossible under `params`. Parameters
/// are not validated.
pub fn log_likelihood_sample(params: &ModelParams, sample: &ArmSample) -> f64 {
    let mut total = 0.0;
    for ((&t, &ln_t), &event) in sample.times.iter().zip(&sample.ln_times).zip(&sample.events) {
        let term = params.ln_lik_term(t, ln_t, event);
        if term.is_nan() || term == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        total += term;
    }
    if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    }
}

/// Log-likelihood of one arm of `data`.
pub fn log_likelihood(params: &ModelParams, data: &SurvivalDataset, arm: Arm) -> Result<f64> {
    params.validate()?;
    let sample = data.arm(arm);
    sample.non_empty()?;
    Ok(log_likelihood_sample(params, &sample))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TracePoint {
    pub n: usize,
    pub log_bme: f64,
}

/// Which records the evidence covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EvidenceScope {
    Arm(Arm),
    /// Both arms, with the joint prior over the two arms' parameters.
    Trial,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvidenceResult {
    pub family: ModelFamily,
    pub scope: EvidenceScope,
    /// Natural log of the marginal likelihood.
    pub log_bme: f64,
    /// Delta-method standard error of `log_bme`.
    pub mc_standard_error: f64,
    pub n_draws: usize,
    /// Effective sample size of the likelihood weights.
    pub ess: f64,
    pub convergence_trace: Vec<TracePoint>,
}

impl EvidenceResult {
    /// Evidence on the linear scale as `(mantissa, base-10 exponent)`.
    pub fn linear(&self) -> (f64, i64) {
        linear_parts(self.log_bme)
    }

    pub fn arm(&self) -> Option<Arm> {
        match self.scope {
            EvidenceScope::Arm(a) => Some(a),
            EvidenceScope::Trial => None,
        }
    }
}

/// Splits `exp(ln_value)` into mantissa and decimal exponent.
pub fn linear_parts(ln_value: f64) -> (f64, i64) {
    if !ln_value.is_finite() {
        return (if ln_value > 0.0 { f64::INFINITY } else { 0.0 }, 0);
    }
    let log10 = ln_value / LN_10;
    let mut exponent = libm::floor(log10);
    let mut mantissa = libm::pow(10.0, log10 - exponent);
    if mantissa >= 9.995 {
        mantissa /= 10.0;
        exponent += 1.0;
    }
    (mantissa, exponent as i64)
}

/// Formats `exp(ln_value)` as e.g. `6.29E-246`.
pub fn format_linear(ln_value: f64) -> String {
    let (m, e) = linear_parts(ln_value);
    format!("{m:.2}E{e:+04}")
}

/// Powers of ten from 1000 up to `n`, then `n`.
pub fn default_checkpoints(n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut c = 1000usize;
    while c < n {
        out.push(c);
        c = c.saturating_mul(10);
    }
    out.push(n);
    out
}

fn log_likelihoods<F>(draws: &[PriorDraw], f: F) -> Vec<f64>
where
    F: Fn(&PriorDraw) -> f64 + Sync + Send,
{
    par::map_chunks(draws, CHUNK, |chunk| chunk.iter().map(&f).collect::<Vec<_>>())
        .into_iter()
        .flatten()
        .collect()
}

fn evidence_from_log_liks(
    family: ModelFamily,
    scope: EvidenceScope,
    lls: &[f64],
    checkpoints: &[usize],
) -> Result<EvidenceResult> {
    let n = lls.len();
    if n == 0 {
        return Err(Error::DegeneratePrior);
    }
    let mut cps: Vec<usize> = checkpoints.iter().copied().filter(|&c| c >= 1 && c < n).collect();
    cps.sort_unstable();
    cps.dedup();
    cps.push(n);

    let mut acc = LogSumExp::new();
    let mut trace = Vec::with_capacity(cps.len());
    let mut next = 0;
    for (i, &l) in lls.iter().enumerate() {
        acc.push(l);
        if i + 1 == cps[next] {
            trace.push(TracePoint {
                n: i + 1,
                log_bme: acc.value() - math::ln((i + 1) as f64),
            });
            next += 1;
        }
    }
    let lse = acc.value();
    if lse == f64::NEG_INFINITY {
        return Err(Error::ZeroEvidence);
    }
    let log_bme = lse - math::ln(n as f64);

    // Weights relative to their mean: w_i = exp(l_i - log_bme).
    let (mut s1, mut s2) = (0.0, 0.0);
    for &l in lls {
        let w = math::exp(l - log_bme);
        s1 += w;
        s2 += w * w;
    }
    let nf = n as f64;
    let var = if n > 1 {
        ((s2 - s1 * s1 / nf) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    let mc_standard_error = math::sqrt(var / nf) / (s1 / nf);
    let ess = s1 * s1 / s2;

    Ok(EvidenceResult {
        family,
        scope,
        log_bme,
        mc_standard_error,
        n_draws: n,
        ess,
        convergence_trace: trace,
    })
}

/// Monte Carlo evidence `ln((1/N) sum_i L(D | theta_i))` over prior draws for
/// one arm, with cumulative estimates at `checkpoints` (the final entry is at
/// `N`).
pub fn compute_bme(
    prior: &PriorDraws,
    data: &SurvivalDataset,
    arm: Arm,
    checkpoints: &[usize],
) -> Result<EvidenceResult> {
    if prior.is_empty() {
        return Err(Error::DegeneratePrior);
    }
    let sample = data.arm(arm);
    sample.non_empty()?;
    let lls = log_likelihoods(&prior.draws, |d| log_likelihood_sample(&d.arms[arm.index()], &sample));
    evidence_from_log_liks(prior.family, EvidenceScope::Arm(arm), &lls, checkpoints)
}

/// Evidence for both arms together under the joint prior.
pub fn compute_trial_bme(
    prior: &PriorDraws,
    data: &SurvivalDataset,
    checkpoints: &[usize],
) -> Result<EvidenceResult> {
    if prior.is_empty() {
        return Err(Error::DegeneratePrior);
    }
    let samples = [data.arm(Arm::One), data.arm(Arm::Two)];
    if samples.iter().all(|s| s.is_empty()) {
        return Err(Error::EmptyData { arm: 1 });
    }
    let lls = log_likelihoods(&prior.draws, |d| {
        log_likelihood_sample(&d.arms[0], &samples[0]) + log_likelihood_sample(&d.arms[1], &samples[1])
    });
    evidence_from_log_liks(prior.family, EvidenceScope::Trial, &lls, checkpoints)
}

/// Per-draw log-likelihoods of one arm, in draw order.
pub fn draw_log_likelihoods(prior: &PriorDraws, data: &SurvivalDataset, arm: Arm) -> Result<Vec<f64>> {
    let sample = data.arm(arm);
    sample.non_empty()?;
    Ok(log_likelihoods(&prior.draws, |d| log_likelihood_sample(&d.arms[arm.index()], &sample)))
}

/// Verbal strength of a Bayes factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EvidenceGrade {
    Negligible,
    Substantial,
    Strong,
    VeryStrong,
    Decisive,
}

impl EvidenceGrade {
    /// Grade of `|log10 BF|`: cut points 0.5, 1, 1.5 and 2.
    pub fn from_log10(log10_bf: f64) -> Self {
        let x = log10_bf.abs();
        if x < 0.5 {
            EvidenceGrade::Negligible
        } else if x < 1.0 {
            EvidenceGrade::Substantial
        } else if x < 1.5 {
            EvidenceGrade::Strong
        } else if x < 2.0 {
            EvidenceGrade::VeryStrong
        } else {
            EvidenceGrade::Decisive
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            EvidenceGrade::Negligible => "negligible",
            EvidenceGrade::Substantial => "substantial",
            EvidenceGrade::Strong => "strong",
            EvidenceGrade::VeryStrong => "very strong",
            EvidenceGrade::Decisive => "decisive",
        }
    }
}

impl fmt::Display for EvidenceGrade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BayesFactor {
    /// `log10(f_i(D) / f_j(D))`; positive favours the first model.
    pub log10_bf: f64,
    pub grade: EvidenceGrade,
}

pub fn bayes_factor_from_log(log_bme_i: f64, log_bme_j: f64) -> BayesFactor {
    let log10_bf = (log_bme_i - log_bme_j) / LN_10;
    BayesFactor {
        log10_bf,
        grade: EvidenceGrade::from_log10(log10_bf),
    }
}

/// Bayes factor of `e_i` against `e_j`. Both must cover the same records.
pub fn bayes_factor(e_i: &EvidenceResult, e_j: &EvidenceResult) -> Result<BayesFactor> {
    if e_i.scope != e_j.scope {
        return Err(Error::Validation(format!(
            "evidences cover different data: {:?} vs {:?}",
            e_i.scope, e_j.scope
        )));
    }
    Ok(bayes_factor_from_log(e_i.log_bme, e_j.log_bme))
}
