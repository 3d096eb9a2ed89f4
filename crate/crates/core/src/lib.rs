//! Prior-informed comparison of parametric survival models.
//!
//! Experts' quartile judgements about survival proportions are fitted to
//! distributions, propagated to joint priors over the parameters of five
//! survival families, and combined with censored data to give Bayesian model
//! evidence, Bayes factors, Hellinger-distance dilution priors, posterior
//! model probabilities and posterior survival summaries. Maximum-likelihood
//! information criteria and nonparametric estimators are provided for
//! comparison.
//!
//! The crate is `no_std` (with `alloc`). Enable `std` for `std::error::Error`
//! impls, `parallel` for rayon-backed chunk parallelism (results are
//! bit-identical with and without it), and `serde` for (de)serialization.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::inconsistent_digit_grouping,
    clippy::excessive_precision,
    clippy::needless_range_loop,
    clippy::collapsible_match
)]

extern crate alloc;

pub mod data;
pub mod elicitation;
pub mod error;
pub mod evidence;
pub mod information;
pub mod math;
pub mod models;
pub mod nonparametric;
pub mod optim;
mod par;
pub mod posterior;
pub mod weights;

pub use data::{Arm, ArmSample, Record, SurvivalDataset};
pub use elicitation::{
    constrained_params, exact_exponential_prior_density, exact_exponential_prior_ln_density,
    fit_beta_from_quartiles, fit_normal_from_quartiles, fit_scaled_beta_from_quartiles, sample_prior,
    sample_prior_with, survival_points, transform_to_params, Constraint, ConstraintSet, DistKind,
    ElicitedQuantity, FitReport, FittedDist, Intermediates, PriorDraw, PriorDraws, PriorSpec,
    QuantityName, Quartiles, SamplerOptions, TransformedParams,
};
pub use error::{Error, Result};
pub use evidence::{
    bayes_factor, bayes_factor_from_log, compute_bme, compute_trial_bme, log_likelihood, BayesFactor,
    EvidenceGrade, EvidenceResult, EvidenceScope, TracePoint,
};
pub use information::{information_criteria, mle_fit, BicSampleSize, Criteria, MleFit};
pub use models::{ModelFamily, ModelParams};
pub use nonparametric::{empirical_hazard, kaplan_meier, HazardSeries, StepFunction};
pub use posterior::{
    posterior_summary, run_mh, snis_check, summarize, Functional, MhSettings, ParamDiagnostic, PosteriorDraws,
    SnisResult, SummaryStat,
};
pub use weights::{
    dilution_from_row_sums, dilution_prior, hellinger_matrix, posterior_from_log_bme, posterior_model_probs, scheme_prior, DistanceMatrix,
    HellingerSettings, HellingerVariant, WeightScheme, WeightTable,
};
