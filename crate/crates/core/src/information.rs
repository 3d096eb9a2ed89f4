//! Maximum-likelihood fits and AIC/BIC.

use alloc::format;
use alloc::vec::Vec;

use crate::data::{Arm, ArmSample, SurvivalDataset};
use crate::elicitation::transform_to_params;
use crate::error::{Error, Result};
use crate::evidence::log_likelihood_sample;
use crate::math;
use crate::models::{ModelFamily, ModelParams};
use crate::nonparametric::kaplan_meier;
use crate::optim::{nelder_mead, NelderMeadOptions};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MleFit {
    pub family: ModelFamily,
    pub arm: Arm,
    pub params: ModelParams,
    pub log_likelihood: f64,
    pub n_params: usize,
    pub n_events: usize,
    pub n: usize,
    pub aic: f64,
    /// BIC with the number of events as sample size.
    pub bic: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Sample size entering the BIC penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BicSampleSize {
    /// Uncensored observations.
    #[default]
    Events,
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Criteria {
    pub aic: f64,
    pub bic: f64,
}

pub fn information_criteria(fit: &MleFit, sample_size: BicSampleSize) -> Result<Criteria> {
    if fit.n_events < 1 {
        return Err(Error::NoEvents { arm: fit.arm.number() });
    }
    let n = match sample_size {
        BicSampleSize::Events => fit.n_events,
        BicSampleSize::Total => fit.n,
    };
    let dev = -2.0 * fit.log_likelihood;
    Ok(Criteria {
        aic: dev + 2.0 * fit.n_params as f64,
        bic: dev + fit.n_params as f64 * math::ln(n as f64),
    })
}

/// Unconstrained coordinates: log of positive parameters, identity for the
/// lognormal location and the Gompertz shape (which must stay >= 0).
fn to_params(family: ModelFamily, x: &[f64]) -> Option<ModelParams> {
    let p = match family {
        ModelFamily::Exponential => ModelParams::Exponential { rate: math::exp(x[0]) },
        ModelFamily::Weibull => ModelParams::Weibull {
            shape: math::exp(x[0]),
            scale: math::exp(x[1]),
        },
        ModelFamily::Lognormal => ModelParams::Lognormal {
            location: x[0],
            shape: math::exp(x[1]),
        },
        ModelFamily::LogLogistic => ModelParams::LogLogistic {
            shape: math::exp(x[0]),
            scale: math::exp(x[1]),
        },
        ModelFamily::Gompertz => ModelParams::Gompertz {
            shape: x[0],
            rate: math::exp(x[1]),
        },
    };
    p.validate().ok().map(|_| p)
}

fn to_coords(p: &ModelParams) -> Vec<f64> {
    match *p {
        ModelParams::Exponential { rate } => alloc::vec![math::ln(rate)],
        ModelParams::Weibull { shape, scale } => alloc::vec![math::ln(shape), math::ln(scale)],
        ModelParams::Lognormal { location, shape } => alloc::vec![location, math::ln(shape)],
        ModelParams::LogLogistic { shape, scale } => alloc::vec![math::ln(shape), math::ln(scale)],
        ModelParams::Gompertz { shape, rate } => alloc::vec![shape, math::ln(rate)],
    }
}

/// Start from the event rate and the spread of log follow-up times.
fn moment_start(family: ModelFamily, s: &ArmSample) -> ModelParams {
    let rate = s.n_events() as f64 / s.times.iter().sum::<f64>();
    let n = s.len() as f64;
    let mean_ln = s.ln_times.iter().sum::<f64>() / n;
    let sd_ln = math::sqrt(s.ln_times.iter().map(|l| (l - mean_ln) * (l - mean_ln)).sum::<f64>() / n).max(0.1);
    match family {
        ModelFamily::Exponential => ModelParams::Exponential { rate },
        ModelFamily::Weibull => ModelParams::Weibull { shape: 1.0, scale: rate },
        ModelFamily::Lognormal => ModelParams::Lognormal {
            location: math::ln(1.0 / rate) - 0.5 * sd_ln * sd_ln,
            shape: sd_ln,
        },
        ModelFamily::LogLogistic => ModelParams::LogLogistic {
            shape: (core::f64::consts::PI / (math::sqrt(3.0) * sd_ln)).max(0.5),
            scale: core::f64::consts::LN_2 / rate,
        },
        ModelFamily::Gompertz => ModelParams::Gompertz {
            shape: 0.01,
            rate,
        },
    }
}

/// Start that reproduces the Kaplan-Meier curve at two event times.
fn km_start(family: ModelFamily, data: &SurvivalDataset, arm: Arm) -> Option<ModelParams> {
    let km = kaplan_meier(data, arm).ok()?;
    let k = km.times.len();
    if k < 2 {
        return None;
    }
    let (a, b) = (k / 4, (3 * k) / 4);
    let (a, b) = if a == b { (0, k - 1) } else { (a, b) };
    let (sa, sb) = (km.survival[a], km.survival[b]);
    if !(sb > 0.0 && sa < 1.0 && sb < sa) {
        return None;
    }
    transform_to_params(family, sa, sb, km.times[a], km.times[b], 0.0)
        .ok()
        .map(|t| t.params)
}

fn simplex_fit(
    family: ModelFamily,
    data: &SurvivalDataset,
    arm: Arm,
    sample: &ArmSample,
) -> Result<(ModelParams, bool, usize)> {
    let neg_ll = |x: &[f64]| match to_params(family, x) {
        Some(p) => -log_likelihood_sample(&p, sample),
        None => f64::INFINITY,
    };
    let moment = moment_start(family, sample);
    let mut starts = alloc::vec![to_coords(&moment)];
    if let Some(p) = km_start(family, data, arm) {
        starts.push(to_coords(&p));
    }
    let mut perturbed = to_coords(&moment);
    perturbed[0] += 0.3;
    if let Some(x) = perturbed.get_mut(1) {
        *x -= 0.3;
    }
    starts.push(perturbed);

    let opts = NelderMeadOptions {
        initial_step: 0.2,
        max_iterations: 20_000,
        f_tol: 1e-12,
        x_tol: 1e-9,
    };
    let mut best: Option<(Vec<f64>, f64, bool, usize)> = None;
    for start in &starts {
        let first = nelder_mead(neg_ll, start, opts);
        // Restart at the optimum to escape a collapsed simplex.
        let res = nelder_mead(neg_ll, &first.x, NelderMeadOptions { initial_step: 0.05, ..opts });
        let iters = first.iterations + res.iterations;
        if res.value.is_finite() && best.as_ref().is_none_or(|b| res.value < b.1) {
            best = Some((res.x, res.value, res.converged, iters));
        }
    }
    let (x, value, converged, iterations) = best.ok_or_else(|| {
        Error::Optimizer(format!("no start gave a finite {family} likelihood for arm {arm}"))
    })?;
    let params = to_params(family, &x)
        .ok_or_else(|| Error::Optimizer(format!("{family} optimum is invalid (objective {value})")))?;
    Ok((params, converged, iterations))
}

/// Maximum-likelihood fit by multi-start Nelder-Mead over transformed
/// parameters; the exponential rate is solved in closed form.
pub fn mle_fit(family: ModelFamily, data: &SurvivalDataset, arm: Arm) -> Result<MleFit> {
    let sample = data.arm(arm);
    sample.non_empty()?;
    let n_events = sample.n_events();
    if n_events == 0 {
        return Err(Error::NoEvents { arm: arm.number() });
    }
    let (params, converged, iterations) = if family == ModelFamily::Exponential {
        let rate = n_events as f64 / sample.times.iter().sum::<f64>();
        (ModelParams::Exponential { rate }, true, 0)
    } else {
        simplex_fit(family, data, arm, &sample)?
    };
    let log_likelihood = log_likelihood_sample(&params, &sample);
    let mut fit = MleFit {
        family,
        arm,
        params,
        log_likelihood,
        n_params: family.n_params(),
        n_events,
        n: sample.len(),
        aic: 0.0,
        bic: 0.0,
        converged,
        iterations,
    };
    let c = information_criteria(&fit, BicSampleSize::Events)?;
    fit.aic = c.aic;
    fit.bic = c.bic;
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Record;

    fn data(rows: &[(f64, bool)]) -> SurvivalDataset {
        SurvivalDataset::new(
            rows.iter()
                .map(|&(time, event)| Record {
                    time,
                    event,
                    arm: Arm::One,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn exponential_closed_form() {
        let d = data(&[(2.0, true), (3.0, true), (5.0, true)]);
        let fit = mle_fit(ModelFamily::Exponential, &d, Arm::One).unwrap();
        assert_eq!(fit.params, ModelParams::Exponential { rate: 0.3 });
        let ll = 3.0 * 0.3f64.ln() - 3.0;
        assert!((fit.log_likelihood - ll).abs() < 1e-12);
        assert!((fit.aic - 15.22384).abs() < 1e-5);
        assert!((fit.bic - 14.32245).abs() < 1e-5);
        let c = information_criteria(&fit, BicSampleSize::Total).unwrap();
        assert_eq!(c.bic, fit.bic);
    }

    #[test]
    fn all_censored_is_an_error() {
        let d = data(&[(2.0, false), (3.0, false)]);
        assert_eq!(
            mle_fit(ModelFamily::Weibull, &d, Arm::One),
            Err(Error::NoEvents { arm: 1 })
        );
    }

    #[test]
    fn aic_penalty_difference() {
        let d = data(&[(2.0, true), (3.0, true), (5.0, true)]);
        let mut a = mle_fit(ModelFamily::Exponential, &d, Arm::One).unwrap();
        let mut b = a.clone();
        a.n_params = 1;
        b.n_params = 2;
        let (ca, cb) = (
            information_criteria(&a, BicSampleSize::Events).unwrap(),
            information_criteria(&b, BicSampleSize::Events).unwrap(),
        );
        assert_eq!(cb.aic - ca.aic, 2.0);
    }

    #[test]
    fn simplex_matches_closed_form_exponential() {
        let d = data(&[(0.5, true), (1.2, true), (2.0, false), (2.7, true), (4.1, true), (6.0, false)]);
        let sample = d.arm(Arm::One);
        let (p, converged, _) = simplex_fit(ModelFamily::Exponential, &d, Arm::One, &sample).unwrap();
        let ModelParams::Exponential { rate } = p else { panic!() };
        assert!(converged);
        assert!((rate / (4.0 / 16.5) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn simplex_agrees_with_closed_form_for_weibull_at_unit_shape() {
        // Weibull with shape 1 nests the exponential; its optimum is no worse.
        let d = data(&[(0.5, true), (1.2, true), (2.0, false), (2.7, true), (4.1, true), (6.0, false)]);
        let ex = mle_fit(ModelFamily::Exponential, &d, Arm::One).unwrap();
        let wb = mle_fit(ModelFamily::Weibull, &d, Arm::One).unwrap();
        assert!(wb.log_likelihood >= ex.log_likelihood - 1e-9);
    }
}
