//! Elicited survival quantities, their fitted distributions, the mapping from
//! survival proportions to per-family parameters, and constrained joint prior
//! sampling.
//!
//! Four quantities are elicited: the control-arm survival `S1(t0)`, the drop
//! `delta11 = S1(t0) - S1(t1)`, the between-arm difference
//! `delta21 = S2(t0) - S1(t0)` and the treatment-arm drop
//! `delta22 = S2(t0) - S2(t1)`. They are sampled independently; the survival
//! proportions at `t0` and `t1` in both arms follow, and each arm's pair is
//! mapped to the parameters of the chosen family.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::math;
use crate::models::{ModelFamily, ModelParams};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum QuantityName {
    #[cfg_attr(feature = "serde", serde(rename = "S1_t0"))]
    S1T0,
    #[cfg_attr(feature = "serde", serde(rename = "delta11"))]
    Delta11,
    #[cfg_attr(feature = "serde", serde(rename = "delta21"))]
    Delta21,
    #[cfg_attr(feature = "serde", serde(rename = "delta22"))]
    Delta22,
}

impl QuantityName {
    pub const ALL: [QuantityName; 4] = [
        QuantityName::S1T0,
        QuantityName::Delta11,
        QuantityName::Delta21,
        QuantityName::Delta22,
    ];

    pub const fn index(self) -> usize {
        match self {
            QuantityName::S1T0 => 0,
            QuantityName::Delta11 => 1,
            QuantityName::Delta21 => 2,
            QuantityName::Delta22 => 3,
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            QuantityName::S1T0 => "S1_t0",
            QuantityName::Delta11 => "delta11",
            QuantityName::Delta21 => "delta21",
            QuantityName::Delta22 => "delta22",
        }
    }

    /// Only the between-arm difference may take negative values.
    pub const fn is_signed(self) -> bool {
        matches!(self, QuantityName::Delta21)
    }

    /// The distribution kind used when none is requested.
    pub const fn default_kind(self) -> DistKind {
        if self.is_signed() {
            DistKind::Normal
        } else {
            DistKind::Beta
        }
    }
}

impl fmt::Display for QuantityName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for QuantityName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QuantityName::ALL
            .into_iter()
            .find(|q| q.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Validation(format!(
                    "unknown quantity '{s}'; expected one of S1_t0, delta11, delta21, delta22"
                ))
            })
    }
}

/// Lower quartile, median and upper quartile of an elicited quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Quartiles {
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
}

impl Quartiles {
    pub const fn new(q25: f64, q50: f64, q75: f64) -> Self {
        Self { q25, q50, q75 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.q25, self.q50, self.q75]
    }

    /// All three values equal: a point judgement.
    pub fn is_point(&self) -> bool {
        self.q25 == self.q50 && self.q50 == self.q75
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q25.is_finite() && self.q50.is_finite() && self.q75.is_finite()) {
            return Err(Error::Validation("quartiles must be finite".into()));
        }
        if !(self.q25 < self.q50 && self.q50 < self.q75) {
            return Err(Error::Validation(format!(
                "quartiles must be strictly increasing, got ({}, {}, {})",
                self.q25, self.q50, self.q75
            )));
        }
        Ok(())
    }

    fn validate_unit(&self) -> Result<()> {
        self.validate()?;
        if !(self.q25 > 0.0 && self.q75 < 1.0) {
            return Err(Error::Validation(format!(
                "quartiles must lie in (0, 1), got ({}, {}, {})",
                self.q25, self.q50, self.q75
            )));
        }
        Ok(())
    }
}

const QUARTILE_PROBS: [f64; 3] = [0.25, 0.5, 0.75];

/// Which distribution to fit to a set of quartiles.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum DistKind {
    Beta,
    Normal,
    ScaledBeta { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum FittedDist {
    Beta { alpha: f64, beta: f64 },
    Normal { mean: f64, sd: f64 },
    /// Beta on `[lower, upper]`.
    ScaledBeta {
        alpha: f64,
        beta: f64,
        lower: f64,
        upper: f64,
    },
    PointMass { value: f64 },
}

impl FittedDist {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            FittedDist::Beta { alpha, beta } => alpha > 0.0 && beta > 0.0 && (alpha + beta).is_finite(),
            FittedDist::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            FittedDist::ScaledBeta {
                alpha,
                beta,
                lower,
                upper,
            } => {
                alpha > 0.0
                    && beta > 0.0
                    && (alpha + beta).is_finite()
                    && lower.is_finite()
                    && upper.is_finite()
                    && lower < upper
            }
            FittedDist::PointMass { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("invalid distribution {self:?}")))
        }
    }

    /// Closed support `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            FittedDist::Beta { .. } => (0.0, 1.0),
            FittedDist::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            FittedDist::ScaledBeta { lower, upper, .. } => (lower, upper),
            FittedDist::PointMass { value } => (value, value),
        }
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self, FittedDist::PointMass { .. })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            FittedDist::Beta { alpha, beta } => math::beta_inc(alpha, beta, x),
            FittedDist::Normal { mean, sd } => math::norm_cdf((x - mean) / sd),
            FittedDist::ScaledBeta {
                alpha,
                beta,
                lower,
                upper,
            } => math::beta_inc(alpha, beta, (x - lower) / (upper - lower)),
            FittedDist::PointMass { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            FittedDist::Beta { alpha, beta } => math::beta_ppf(alpha, beta, p),
            FittedDist::Normal { mean, sd } => mean + sd * math::norm_ppf(p),
            FittedDist::ScaledBeta {
                alpha,
                beta,
                lower,
                upper,
            } => lower + (upper - lower) * math::beta_ppf(alpha, beta, p),
            FittedDist::PointMass { value } => value,
        }
    }

    /// Log density. A point mass has no density; it returns 0 at its value.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            FittedDist::Beta { alpha, beta } => math::beta_ln_pdf(alpha, beta, x),
            FittedDist::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - math::LN_SQRT_2PI - math::ln(sd)
            }
            FittedDist::ScaledBeta {
                alpha,
                beta,
                lower,
                upper,
            } => {
                let w = upper - lower;
                math::beta_ln_pdf(alpha, beta, (x - lower) / w) - math::ln(w)
            }
            FittedDist::PointMass { value } => {
                if x == value {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            FittedDist::Beta { alpha, beta } => alpha / (alpha + beta),
            FittedDist::Normal { mean, .. } => mean,
            FittedDist::ScaledBeta {
                alpha,
                beta,
                lower,
                upper,
            } => lower + (upper - lower) * alpha / (alpha + beta),
            FittedDist::PointMass { value } => value,
        }
    }

    fn sampler(&self) -> Result<QuantitySampler> {
        self.validate()?;
        let beta = |a: f64, b: f64| {
            rand_distr::Beta::new(a, b)
                .map_err(|e| Error::Validation(format!("beta sampler: {e}")))
        };
        Ok(match *self {
            FittedDist::Beta { alpha, beta: b } => QuantitySampler::Beta(beta(alpha, b)?),
            FittedDist::Normal { mean, sd } => QuantitySampler::Normal(
                rand_distr::Normal::new(mean, sd)
                    .map_err(|e| Error::Validation(format!("normal sampler: {e}")))?,
            ),
            FittedDist::ScaledBeta {
                alpha,
                beta: b,
                lower,
                upper,
            } => QuantitySampler::Scaled(beta(alpha, b)?, lower, upper - lower),
            FittedDist::PointMass { value } => QuantitySampler::Point(value),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(self.sampler()?.sample(rng))
    }
}

impl fmt::Display for FittedDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FittedDist::Beta { alpha, beta } => write!(f, "Beta({alpha:.2}, {beta:.2})"),
            FittedDist::Normal { mean, sd } => write!(f, "N({mean:.3}, {sd:.3}^2)"),
            FittedDist::ScaledBeta {
                alpha,
                beta,
                lower,
                upper,
            } => write!(f, "ScaledBeta({alpha:.2}, {beta:.2}; [{lower}, {upper}])"),
            FittedDist::PointMass { value } => write!(f, "PointMass({value})"),
        }
    }
}

#[derive(Debug, Clone)]
enum QuantitySampler {
    Beta(rand_distr::Beta<f64>),
    Normal(rand_distr::Normal<f64>),
    Scaled(rand_distr::Beta<f64>, f64, f64),
    Point(f64),
}

impl QuantitySampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            QuantitySampler::Beta(d) => d.sample(rng),
            QuantitySampler::Normal(d) => d.sample(rng),
            QuantitySampler::Scaled(d, lo, w) => lo + w * d.sample(rng),
            QuantitySampler::Point(v) => *v,
        }
    }
}

/// Outcome of fitting a distribution to quartiles.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitReport {
    pub distribution: FittedDist,
    /// Root-mean-square gap between the fitted and elicited quartiles.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn quartile_residual(dist: &FittedDist, q: &Quartiles) -> f64 {
    let sq: f64 = QUARTILE_PROBS
        .iter()
        .zip(q.as_array())
        .map(|(&p, v)| {
            let d = dist.quantile(p) - v;
            d * d
        })
        .sum();
    math::sqrt(sq / 3.0)
}

/// Fits `Beta(alpha, beta)` to quartiles in `(0, 1)`.
///
/// Minimises `sum_k (I_{q_k}(alpha, beta) - p_k)^2` over `(ln alpha, ln beta)`
/// with Nelder-Mead from a method-of-moments start.
pub fn fit_beta_from_quartiles(q: Quartiles) -> Result<FitReport> {
    q.validate_unit()?;
    let m = q.q50;
    let sd = (q.q75 - q.q25) / (2.0 * math::NORM_Q75);
    let k = m * (1.0 - m) / (sd * sd) - 1.0;
    let k = if k > 0.0 { k } else { 2.0 };
    let start = [math::ln(m * k), math::ln((1.0 - m) * k)];

    let points = q.as_array();
    let objective = |x: &[f64]| {
        let (a, b) = (math::exp(x[0]), math::exp(x[1]));
        if !(a.is_finite() && b.is_finite()) || a > 1e7 || b > 1e7 {
            return f64::INFINITY;
        }
        points
            .iter()
            .zip(QUARTILE_PROBS)
            .map(|(&v, p)| {
                let d = math::beta_inc(a, b, v) - p;
                d * d
            })
            .sum()
    };
    let opts = NelderMeadOptions {
        initial_step: 0.05,
        max_iterations: 5_000,
        f_tol: 1e-15,
        x_tol: 1e-10,
    };
    let res = nelder_mead(objective, &start, opts);
    let distribution = FittedDist::Beta {
        alpha: math::exp(res.x[0]),
        beta: math::exp(res.x[1]),
    };
    let residual = quartile_residual(&distribution, &q);
    if !res.converged || !residual.is_finite() {
        return Err(Error::FitFailed { residual });
    }
    Ok(FitReport {
        distribution,
        residual,
        converged: res.converged,
        iterations: res.iterations,
    })
}

/// Least-squares normal fit to quartiles, solved in closed form.
pub fn fit_normal_from_quartiles(q: Quartiles) -> Result<FitReport> {
    if q.q75 == q.q25 && q.q25.is_finite() {
        return Err(Error::DegenerateSpread);
    }
    q.validate()?;
    let distribution = FittedDist::Normal {
        mean: (q.q25 + q.q50 + q.q75) / 3.0,
        sd: (q.q75 - q.q25) / (2.0 * math::NORM_Q75),
    };
    Ok(FitReport {
        distribution,
        residual: quartile_residual(&distribution, &q),
        converged: true,
        iterations: 0,
    })
}

/// Beta fit on `[lower, upper]` via the unit-interval fit of rescaled quartiles.
pub fn fit_scaled_beta_from_quartiles(q: Quartiles, lower: f64, upper: f64) -> Result<FitReport> {
    if !(lower.is_finite() && upper.is_finite() && lower < upper) {
        return Err(Error::Validation(format!(
            "scaled beta support must satisfy lower < upper, got [{lower}, {upper}]"
        )));
    }
    q.validate()?;
    let w = upper - lower;
    let unit = Quartiles::new((q.q25 - lower) / w, (q.q50 - lower) / w, (q.q75 - lower) / w);
    if !(unit.q25 > 0.0 && unit.q75 < 1.0) {
        return Err(Error::Validation(format!(
            "quartiles must lie strictly inside [{lower}, {upper}]"
        )));
    }
    let fit = fit_beta_from_quartiles(unit)?;
    let FittedDist::Beta { alpha, beta } = fit.distribution else {
        unreachable!()
    };
    let distribution = FittedDist::ScaledBeta {
        alpha,
        beta,
        lower,
        upper,
    };
    Ok(FitReport {
        distribution,
        residual: quartile_residual(&distribution, &q),
        ..fit
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ElicitedQuantity {
    pub name: QuantityName,
    pub quartiles: Quartiles,
    pub distribution: FittedDist,
}

impl ElicitedQuantity {
    /// Fits `kind` to the quartiles. Three equal quartiles give a point mass.
    pub fn fit(name: QuantityName, quartiles: Quartiles, kind: DistKind) -> Result<(Self, FitReport)> {
        let report = if quartiles.is_point() && quartiles.q50.is_finite() {
            FitReport {
                distribution: FittedDist::PointMass {
                    value: quartiles.q50,
                },
                residual: 0.0,
                converged: true,
                iterations: 0,
            }
        } else {
            match kind {
                DistKind::Beta => fit_beta_from_quartiles(quartiles)?,
                DistKind::Normal => fit_normal_from_quartiles(quartiles)?,
                DistKind::ScaledBeta { lower, upper } => {
                    fit_scaled_beta_from_quartiles(quartiles, lower, upper)?
                }
            }
        };
        let q = Self {
            name,
            quartiles,
            distribution: report.distribution,
        };
        q.validate()?;
        Ok((q, report))
    }

    pub fn validate(&self) -> Result<()> {
        self.distribution.validate()?;
        let allowed = match self.distribution {
            FittedDist::Beta { .. } => true,
            FittedDist::Normal { .. } | FittedDist::ScaledBeta { .. } => self.name.is_signed(),
            FittedDist::PointMass { value } => {
                self.name.is_signed() || (0.0..=1.0).contains(&value)
            }
        };
        if !allowed {
            return Err(Error::Validation(format!(
                "{} cannot use a {} distribution",
                self.name,
                match self.distribution {
                    FittedDist::Normal { .. } => "normal",
                    FittedDist::ScaledBeta { .. } => "scaled beta",
                    _ => "point mass outside [0, 1]",
                }
            )));
        }
        Ok(())
    }
}

/// Plausibility constraints applied on top of the elicited inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ConstraintSet {
    /// Largest admissible population mean survival, years. `None` disables it.
    pub mean_cap: Option<f64>,
    /// Inclusive Weibull shape range. `None` disables it.
    pub weibull_shape_range: Option<(f64, f64)>,
    pub gompertz_requires_theta_gt_lambda: bool,
    pub loglogistic_requires_finite_mean: bool,
}

impl Default for ConstraintSet {
    fn default() -> Self {
        Self {
            mean_cap: Some(50.0),
            weibull_shape_range: Some((0.3, 3.5)),
            gompertz_requires_theta_gt_lambda: true,
            loglogistic_requires_finite_mean: true,
        }
    }
}

impl ConstraintSet {
    /// No family-specific checks; only the elicited inequalities apply.
    pub const fn inequalities_only() -> Self {
        Self {
            mean_cap: None,
            weibull_shape_range: None,
            gompertz_requires_theta_gt_lambda: false,
            loglogistic_requires_finite_mean: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(cap) = self.mean_cap {
            if !(cap > 0.0) {
                return Err(Error::Validation(format!("mean_cap must be > 0, got {cap}")));
            }
        }
        if let Some((lo, hi)) = self.weibull_shape_range {
            if !(lo > 0.0 && lo <= hi) {
                return Err(Error::Validation(format!(
                    "weibull_shape_range must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// A check that can reject a prior draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Constraint {
    /// `S1(t0) + delta21 > 0`
    S2T0Positive,
    /// `1 - S1(t0) - delta21 > 0`
    S2T0BelowOne,
    /// `S1(t1) = S1(t0) - delta11 > 0`
    S1T1Positive,
    /// `S2(t1) = S1(t0) + delta21 - delta22 > 0`
    S2T1Positive,
    /// The survival pair does not map to valid family parameters.
    TransformDomain,
    WeibullShapeRange,
    LogLogisticFiniteMean,
    GompertzThetaAboveLambda,
    MeanCap,
}

impl Constraint {
    pub const ALL: [Constraint; 9] = [
        Constraint::S2T0Positive,
        Constraint::S2T0BelowOne,
        Constraint::S1T1Positive,
        Constraint::S2T1Positive,
        Constraint::TransformDomain,
        Constraint::WeibullShapeRange,
        Constraint::LogLogisticFiniteMean,
        Constraint::GompertzThetaAboveLambda,
        Constraint::MeanCap,
    ];

    pub const COUNT: usize = Self::ALL.len();

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Constraint::S2T0Positive => "S2(t0) > 0",
            Constraint::S2T0BelowOne => "S2(t0) < 1",
            Constraint::S1T1Positive => "S1(t1) > 0",
            Constraint::S2T1Positive => "S2(t1) > 0",
            Constraint::TransformDomain => "valid family parameters",
            Constraint::WeibullShapeRange => "Weibull shape within range",
            Constraint::LogLogisticFiniteMean => "log-logistic shape > 1",
            Constraint::GompertzThetaAboveLambda => "Gompertz shape > rate",
            Constraint::MeanCap => "mean survival <= cap",
        }
    }

    /// Elicited inequalities and transform failures, as opposed to
    /// family plausibility checks.
    pub const fn is_structural(self) -> bool {
        matches!(
            self,
            Constraint::S2T0Positive
                | Constraint::S2T0BelowOne
                | Constraint::S1T1Positive
                | Constraint::S2T1Positive
                | Constraint::TransformDomain
        )
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Elicitation times, elicited quantities and constraints.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PriorSpec {
    pub t0: f64,
    pub t1: f64,
    /// Origin of the first Gompertz hazard interval.
    #[cfg_attr(feature = "serde", serde(default))]
    pub x0: f64,
    pub quantities: Vec<ElicitedQuantity>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub constraints: ConstraintSet,
}

impl PriorSpec {
    pub fn new(t0: f64, t1: f64, quantities: Vec<ElicitedQuantity>) -> Result<Self> {
        let spec = Self {
            t0,
            t1,
            x0: 0.0,
            quantities,
            constraints: ConstraintSet::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x0 >= 0.0 && self.x0 < self.t0 && self.t0 < self.t1 && self.t1.is_finite()) {
            return Err(Error::Validation(format!(
                "times must satisfy 0 <= x0 < t0 < t1, got x0 = {}, t0 = {}, t1 = {}",
                self.x0, self.t0, self.t1
            )));
        }
        self.constraints.validate()?;
        for name in QuantityName::ALL {
            let n = self.quantities.iter().filter(|q| q.name == name).count();
            if n != 1 {
                return Err(Error::Validation(format!(
                    "quantity {name} must appear exactly once, found {n}"
                )));
            }
        }
        if self.quantities.len() != 4 {
            return Err(Error::Validation("exactly four quantities are required".into()));
        }
        for q in &self.quantities {
            q.validate()?;
        }
        Ok(())
    }

    pub fn quantity(&self, name: QuantityName) -> Option<&ElicitedQuantity> {
        self.quantities.iter().find(|q| q.name == name)
    }

    fn ordered(&self) -> Result<[FittedDist; 4]> {
        let get = |n| {
            self.quantity(n)
                .map(|q| q.distribution)
                .ok_or_else(|| Error::Validation(format!("missing quantity {n}")))
        };
        Ok([
            get(QuantityName::S1T0)?,
            get(QuantityName::Delta11)?,
            get(QuantityName::Delta21)?,
            get(QuantityName::Delta22)?,
        ])
    }

    /// Prior distributions in `QuantityName::ALL` order.
    pub fn distributions(&self) -> Result<[FittedDist; 4]> {
        self.validate()?;
        self.ordered()
    }
}

/// Survival proportions `[[S1(t0), S1(t1)], [S2(t0), S2(t1)]]` implied by the
/// elicited quantities in `QuantityName::ALL` order.
pub fn survival_points(q: &[f64; 4]) -> [[f64; 2]; 2] {
    let [s1_t0, d11, d21, d22] = *q;
    let s2_t0 = s1_t0 + d21;
    [[s1_t0, s1_t0 - d11], [s2_t0, s2_t0 - d22]]
}

/// Family-specific intermediate quantities of the survival-to-parameter map.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Intermediates {
    None,
    /// `Phi^-1(1 - S(t)) = gamma0 + gamma1 ln t`.
    Lognormal { gamma0: f64, gamma1: f64 },
    /// `ln((1 - S(t)) / S(t)) = alpha + shape ln t`.
    LogLogistic { alpha: f64 },
    Gompertz {
        /// Constant hazards on `[x0, t0]` and `(t0, t1]`.
        interval_hazards: [f64; 2],
        /// Conditional failure probabilities on the same intervals.
        interval_probs: [f64; 2],
        /// Survival at `t0` and `t1` under the fitted parameters.
        achieved: [f64; 2],
        /// Equal interval hazards, so the shape is zero.
        degenerate: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransformedParams {
    pub params: ModelParams,
    pub intermediates: Intermediates,
}

/// Maps survival proportions at `t0` and `t1` to parameters of `family`.
///
/// The exponential uses only `s_t0`. The Gompertz map treats the hazard as
/// constant on `[x0, t0]` and `(t0, t1]` and matches `lambda e^{theta t}` to
/// those constants at `t0` and `t1`, taking `S(x0) = 1`; its survival at the
/// elicitation times is therefore approximate and is reported in the
/// intermediates. A Gompertz pair whose hazard would decrease is rejected.
pub fn transform_to_params(
    family: ModelFamily,
    s_t0: f64,
    s_t1: f64,
    t0: f64,
    t1: f64,
    x0: f64,
) -> Result<TransformedParams> {
    if !(x0 >= 0.0 && x0 < t0 && t0 < t1 && t1.is_finite()) {
        return Err(Error::Domain(format!(
            "times must satisfy 0 <= x0 < t0 < t1, got x0 = {x0}, t0 = {t0}, t1 = {t1}"
        )));
    }
    if !(s_t0 > 0.0 && s_t0 < 1.0) {
        return Err(Error::Domain(format!("S(t0) must lie in (0, 1), got {s_t0}")));
    }
    if family == ModelFamily::Exponential {
        let params = ModelParams::Exponential {
            rate: -math::ln(s_t0) / t0,
        };
        params.validate()?;
        return Ok(TransformedParams {
            params,
            intermediates: Intermediates::None,
        });
    }
    if !(s_t1 > 0.0) {
        return Err(Error::Domain(format!("S(t1) must be > 0, got {s_t1}")));
    }
    if !(s_t1 < s_t0) {
        return Err(Error::Monotonicity { s_t0, s_t1 });
    }

    let (ln_t0, ln_t1) = (math::ln(t0), math::ln(t1));
    let d_ln_t = ln_t1 - ln_t0;
    let (params, intermediates) = match family {
        ModelFamily::Exponential => unreachable!(),
        ModelFamily::Weibull => {
            // ln(-ln S(t)) = ln(scale) + shape ln t
            let c0 = math::ln(-math::ln(s_t0));
            let c1 = math::ln(-math::ln(s_t1));
            let shape = (c1 - c0) / d_ln_t;
            let scale = math::exp(c0 - shape * ln_t0);
            (ModelParams::Weibull { shape, scale }, Intermediates::None)
        }
        ModelFamily::Lognormal => {
            let z0 = -math::norm_ppf(s_t0);
            let z1 = -math::norm_ppf(s_t1);
            let gamma1 = (z1 - z0) / d_ln_t;
            let gamma0 = z0 - gamma1 * ln_t0;
            (
                ModelParams::Lognormal {
                    location: -gamma0 / gamma1,
                    shape: 1.0 / gamma1,
                },
                Intermediates::Lognormal { gamma0, gamma1 },
            )
        }
        ModelFamily::LogLogistic => {
            let a0 = math::ln(1.0 - s_t0) - math::ln(s_t0);
            let a1 = math::ln(1.0 - s_t1) - math::ln(s_t1);
            let shape = (a1 - a0) / d_ln_t;
            let alpha = a0 - shape * ln_t0;
            (
                ModelParams::LogLogistic {
                    shape,
                    scale: math::exp(-alpha / shape),
                },
                Intermediates::LogLogistic { alpha },
            )
        }
        ModelFamily::Gompertz => {
            let pi0 = 1.0 - s_t0;
            let pi1 = 1.0 - s_t1 / s_t0;
            let h0 = -math::ln(s_t0) / (t0 - x0);
            let h1 = -(math::ln(s_t1) - math::ln(s_t0)) / (t1 - t0);
            let (ln_h0, ln_h1) = (math::ln(h0), math::ln(h1));
            let theta = (ln_h1 - ln_h0) / (t1 - t0);
            let ln_lambda = (t1 * ln_h0 - t0 * ln_h1) / (t1 - t0);
            let params = ModelParams::Gompertz {
                shape: theta,
                rate: math::exp(ln_lambda),
            };
            let degenerate = theta == 0.0;
            let achieved = if theta >= 0.0 {
                [
                    math::exp(params.ln_survival_unchecked(t0)),
                    math::exp(params.ln_survival_unchecked(t1)),
                ]
            } else {
                [f64::NAN; 2]
            };
            (
                params,
                Intermediates::Gompertz {
                    interval_hazards: [h0, h1],
                    interval_probs: [pi0, pi1],
                    achieved,
                    degenerate,
                },
            )
        }
    };
    params.validate()?;
    Ok(TransformedParams {
        params,
        intermediates,
    })
}

/// Why a vector of elicited quantities was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rejection {
    pub constraint: Constraint,
}

fn check_inequalities(family: ModelFamily, s: &[[f64; 2]; 2]) -> core::result::Result<(), Constraint> {
    if !(s[1][0] > 0.0) {
        return Err(Constraint::S2T0Positive);
    }
    if !(1.0 - s[1][0] > 0.0) {
        return Err(Constraint::S2T0BelowOne);
    }
    if family == ModelFamily::Exponential {
        return Ok(());
    }
    if !(s[0][1] > 0.0) {
        return Err(Constraint::S1T1Positive);
    }
    if !(s[1][1] > 0.0) {
        return Err(Constraint::S2T1Positive);
    }
    Ok(())
}

fn check_family(params: &ModelParams, c: &ConstraintSet) -> core::result::Result<(), Constraint> {
    match *params {
        ModelParams::Weibull { shape, .. } => {
            if let Some((lo, hi)) = c.weibull_shape_range {
                if !(shape >= lo && shape <= hi) {
                    return Err(Constraint::WeibullShapeRange);
                }
            }
        }
        ModelParams::LogLogistic { shape, .. } => {
            if c.loglogistic_requires_finite_mean && !(shape > 1.0) {
                return Err(Constraint::LogLogisticFiniteMean);
            }
        }
        ModelParams::Gompertz { shape, rate } => {
            if c.gompertz_requires_theta_gt_lambda && !(shape > rate) {
                return Err(Constraint::GompertzThetaAboveLambda);
            }
        }
        _ => {}
    }
    Ok(())
}

fn check_mean(params: &ModelParams, c: &ConstraintSet) -> core::result::Result<(), Constraint> {
    if let Some(cap) = c.mean_cap {
        match params.mean_survival() {
            Ok(m) if m <= cap => {}
            _ => return Err(Constraint::MeanCap),
        }
    }
    Ok(())
}

/// Applies every prior constraint to one vector of elicited quantities
/// (in `QuantityName::ALL` order) and returns the per-arm parameters.
pub fn constrained_params(
    family: ModelFamily,
    spec: &PriorSpec,
    quantities: &[f64; 4],
) -> core::result::Result<[ModelParams; 2], Constraint> {
    let s = survival_points(quantities);
    check_inequalities(family, &s)?;
    let mut arms = [ModelParams::Exponential { rate: 1.0 }; 2];
    for (arm, pair) in arms.iter_mut().zip(&s) {
        let tp = transform_to_params(family, pair[0], pair[1], spec.t0, spec.t1, spec.x0)
            .map_err(|_| Constraint::TransformDomain)?;
        if let ModelParams::Gompertz { shape, .. } = tp.params {
            if !(shape > 0.0) {
                return Err(Constraint::TransformDomain);
            }
        }
        *arm = tp.params;
    }
    for p in &arms {
        check_family(p, &spec.constraints)?;
    }
    for p in &arms {
        check_mean(p, &spec.constraints)?;
    }
    Ok(arms)
}

/// One accepted joint prior draw.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PriorDraw {
    /// `S1(t0)`, `delta11`, `delta21`, `delta22`.
    pub quantities: [f64; 4],
    /// `[[S1(t0), S1(t1)], [S2(t0), S2(t1)]]`.
    pub survival: [[f64; 2]; 2],
    pub arms: [ModelParams; 2],
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PriorDraws {
    pub family: ModelFamily,
    pub draws: Vec<PriorDraw>,
    /// Accepted draws over draws that passed the elicited inequalities and
    /// mapped to valid parameters in both arms.
    pub acceptance_rate: f64,
    /// Accepted draws over all attempts.
    pub draw_efficiency: f64,
    pub attempts: u64,
    /// Attempts that reached the family plausibility checks.
    pub eligible: u64,
    /// Rejections per constraint, indexed by [`Constraint::index`].
    pub rejections: [u64; Constraint::COUNT],
    pub seed: u64,
    pub chunk_size: usize,
}

impl PriorDraws {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn params(&self, arm: crate::Arm) -> impl Iterator<Item = &ModelParams> + '_ {
        self.draws.iter().map(move |d| &d.arms[arm.index()])
    }

    pub fn rejection_counts(&self) -> impl Iterator<Item = (Constraint, u64)> + '_ {
        Constraint::ALL.into_iter().map(|c| (c, self.rejections[c.index()]))
    }

    /// The constraint with the most rejections, if any draw was rejected.
    pub fn most_violated(&self) -> Option<Constraint> {
        most_violated(&self.rejections)
    }
}

fn most_violated(tally: &[u64; Constraint::COUNT]) -> Option<Constraint> {
    Constraint::ALL
        .into_iter()
        .filter(|c| tally[c.index()] > 0)
        .max_by_key(|c| (tally[c.index()], core::cmp::Reverse(c.index())))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerOptions {
    /// Attempts per RNG stream.
    pub chunk_size: usize,
    /// Attempts after which a low efficiency is declared infeasible.
    pub probe_attempts: u64,
    pub min_efficiency: f64,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            chunk_size: 4096,
            probe_attempts: 100_000,
            min_efficiency: 1e-4,
        }
    }
}

/// Chunks evaluated between stopping checks.
const CHUNK_BATCH: usize = 16;

#[derive(Debug, Clone, Copy)]
enum Outcome {
    Accepted(PriorDraw),
    Rejected(Constraint),
}

struct ChunkResult {
    outcomes: Vec<Outcome>,
}

/// Seeds the RNG for chunk `chunk` of a run seeded with `seed`.
pub(crate) fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn run_chunk(
    family: ModelFamily,
    spec: &PriorSpec,
    samplers: &[QuantitySampler; 4],
    seed: u64,
    chunk: u64,
    size: usize,
) -> ChunkResult {
    let mut rng = chunk_rng(seed, chunk);
    let mut outcomes = Vec::with_capacity(size);
    for _ in 0..size {
        let q = [
            samplers[0].sample(&mut rng),
            samplers[1].sample(&mut rng),
            samplers[2].sample(&mut rng),
            samplers[3].sample(&mut rng),
        ];
        outcomes.push(match constrained_params(family, spec, &q) {
            Ok(arms) => Outcome::Accepted(PriorDraw {
                quantities: q,
                survival: survival_points(&q),
                arms,
            }),
            Err(c) => Outcome::Rejected(c),
        });
    }
    ChunkResult { outcomes }
}

/// Draws `n` constrained joint prior samples with default options.
pub fn sample_prior(family: ModelFamily, spec: &PriorSpec, n: usize, seed: u64) -> Result<PriorDraws> {
    sample_prior_with(family, spec, n, seed, &SamplerOptions::default())
}

/// Rejection sampler over independent elicited quantities.
///
/// Attempts are generated in chunks of `chunk_size`, chunk `c` using the
/// ChaCha8 stream `c` of `seed`. Outcomes are concatenated in chunk order and
/// cut at the `n`-th acceptance, so the result depends only on
/// `(seed, n, chunk_size)`.
pub fn sample_prior_with(
    family: ModelFamily,
    spec: &PriorSpec,
    n: usize,
    seed: u64,
    opts: &SamplerOptions,
) -> Result<PriorDraws> {
    if n == 0 {
        return Err(Error::Validation("number of prior draws must be >= 1".into()));
    }
    if opts.chunk_size == 0 {
        return Err(Error::Validation("chunk_size must be >= 1".into()));
    }
    let dists = spec.distributions()?;
    let samplers = [
        dists[0].sampler()?,
        dists[1].sampler()?,
        dists[2].sampler()?,
        dists[3].sampler()?,
    ];

    let mut draws = Vec::with_capacity(n);
    let mut tally = [0u64; Constraint::COUNT];
    let mut attempts = 0u64;
    let mut next_chunk = 0u64;

    'outer: loop {
        let base = next_chunk;
        let batch = par::map_indices(CHUNK_BATCH, |i| {
            run_chunk(family, spec, &samplers, seed, base + i as u64, opts.chunk_size)
        });
        next_chunk += CHUNK_BATCH as u64;
        for chunk in batch {
            for outcome in chunk.outcomes {
                attempts += 1;
                match outcome {
                    Outcome::Accepted(d) => {
                        draws.push(d);
                        if draws.len() == n {
                            break 'outer;
                        }
                    }
                    Outcome::Rejected(c) => tally[c.index()] += 1,
                }
                if attempts >= opts.probe_attempts
                    && (draws.len() as f64) < opts.min_efficiency * attempts as f64
                {
                    return Err(Error::Infeasible {
                        constraint: most_violated(&tally).unwrap_or(Constraint::TransformDomain),
                        acceptance: draws.len() as f64 / attempts as f64,
                        attempts,
                    });
                }
            }
        }
    }

    let structural: u64 = Constraint::ALL
        .iter()
        .filter(|c| c.is_structural())
        .map(|c| tally[c.index()])
        .sum();
    let eligible = attempts - structural;
    Ok(PriorDraws {
        family,
        acceptance_rate: n as f64 / eligible as f64,
        draw_efficiency: n as f64 / attempts as f64,
        draws,
        attempts,
        eligible,
        rejections: tally,
        seed,
        chunk_size: opts.chunk_size,
    })
}

/// Log density of the exponential rate `lambda = -ln(S(t)) / t` when
/// `S(t) ~ Beta(alpha, beta)`.
pub fn exact_exponential_prior_ln_density(lambda: f64, alpha: f64, beta: f64, t: f64) -> Result<f64> {
    if !(lambda > 0.0 && alpha > 0.0 && beta > 0.0 && t > 0.0) {
        return Err(Error::Domain(format!(
            "requires lambda, alpha, beta, t > 0; got {lambda}, {alpha}, {beta}, {t}"
        )));
    }
    let x = -lambda * t;
    // ln(1 - e^{-lambda t}) without cancellation
    let ln_one_minus = if x > -core::f64::consts::LN_2 {
        math::ln(-math::exp_m1(x))
    } else {
        math::ln_1p(-math::exp(x))
    };
    Ok(math::ln(t) - math::ln_beta(alpha, beta) + alpha * x + (beta - 1.0) * ln_one_minus)
}

pub fn exact_exponential_prior_density(lambda: f64, alpha: f64, beta: f64, t: f64) -> Result<f64> {
    exact_exponential_prior_ln_density(lambda, alpha, beta, t).map(math::exp)
}
