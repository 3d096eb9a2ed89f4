use alloc::string::String;

use crate::elicitation::Constraint;
use crate::models::ModelFamily;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid {family} parameters: {reason}")]
    InvalidParams {
        family: ModelFamily,
        reason: &'static str,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("hazard overflow at t = {t}: survival is numerically zero")]
    HazardOverflow { t: f64 },
    #[error("mean survival is undefined for log-logistic shape {shape} <= 1")]
    UndefinedMean { shape: f64 },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("quartiles have zero spread")]
    DegenerateSpread,
    #[error("distribution fit did not converge (residual {residual:e})")]
    FitFailed { residual: f64 },
    #[error("survival must decrease: S(t1) = {s_t1} is not below S(t0) = {s_t0}")]
    Monotonicity { s_t0: f64, s_t1: f64 },
    #[error("prior specification is infeasible: acceptance {acceptance:e} after {attempts} draws, most violated constraint: {constraint}")]
    Infeasible {
        constraint: Constraint,
        acceptance: f64,
        attempts: u64,
    },
    #[error("no records for arm {arm}")]
    EmptyData { arm: u8 },
    #[error("every prior draw has zero likelihood")]
    ZeroEvidence,
    #[error("prior has no draws")]
    DegeneratePrior,
    #[error("all model distances are zero; dilution weights are undefined")]
    DegenerateWeights,
    #[error("{undefined_fraction:.3} of draws leave the functional undefined")]
    Unsummarizable { undefined_fraction: f64 },
    #[error("arm {arm} has no events; maximum likelihood is on the boundary")]
    NoEvents { arm: u8 },
    #[error("optimizer failed: {0}")]
    Optimizer(String),
}

pub type Result<T> = core::result::Result<T, Error>;
