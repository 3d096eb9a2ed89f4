//! The five parametric survival families.
//!
//! | family       | parameters                     | S(t)                              |
//! |--------------|--------------------------------|-----------------------------------|
//! | exponential  | rate λ                         | exp(−λt)                          |
//! | Weibull      | shape ν, scale λ               | exp(−λt^ν)                        |
//! | lognormal    | location μ, shape σ            | Φ(−(ln t − μ)/σ)                  |
//! | log-logistic | shape β, scale θ               | 1 / (1 + (t/θ)^β)                 |
//! | Gompertz     | shape θ ≥ 0, rate λ            | exp(−(λ/θ)(e^{θt} − 1))           |
//!
//! The Weibull uses the BUGS/JAGS parameterisation (`λ` multiplies `t^ν`).
//! Time is measured in years. All evaluation happens in log space; the
//! linear-scale functions are `exp` of their log counterparts.

use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::math::{self, LN2, PI_};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ModelFamily {
    Exponential,
    Weibull,
    Lognormal,
    #[cfg_attr(feature = "serde", serde(alias = "log-logistic", alias = "log_logistic"))]
    LogLogistic,
    Gompertz,
}

impl ModelFamily {
    /// All families, in the order used by the comparison tables.
    pub const ALL: [ModelFamily; 5] = [
        ModelFamily::Exponential,
        ModelFamily::Weibull,
        ModelFamily::Lognormal,
        ModelFamily::LogLogistic,
        ModelFamily::Gompertz,
    ];

    pub const fn n_params(self) -> usize {
        match self {
            ModelFamily::Exponential => 1,
            _ => 2,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            ModelFamily::Exponential => "exponential",
            ModelFamily::Weibull => "weibull",
            ModelFamily::Lognormal => "lognormal",
            ModelFamily::LogLogistic => "loglogistic",
            ModelFamily::Gompertz => "gompertz",
        }
    }

    /// Names of the scalar parameters, in [`ModelParams::values`] order.
    pub const fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelFamily::Exponential => &["rate"],
            ModelFamily::Weibull => &["shape", "scale"],
            ModelFamily::Lognormal => &["location", "shape"],
            ModelFamily::LogLogistic => &["shape", "scale"],
            ModelFamily::Gompertz => &["shape", "rate"],
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "exponential" => Ok(ModelFamily::Exponential),
            "weibull" => Ok(ModelFamily::Weibull),
            "lognormal" | "log-normal" => Ok(ModelFamily::Lognormal),
            "loglogistic" | "log-logistic" | "log_logistic" => Ok(ModelFamily::LogLogistic),
            "gompertz" => Ok(ModelFamily::Gompertz),
            _ => Err(Error::Validation(alloc::format!(
                "unknown family `{s}`; expected one of exponential, weibull, lognormal, loglogistic, gompertz"
            ))),
        }
    }
}

/// Parameters of one family for one treatment arm.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "lowercase"))]
pub enum ModelParams {
    /// `rate` λ in 1/years.
    Exponential { rate: f64 },
    /// `shape` ν (dimensionless), `scale` λ in years^(−ν).
    Weibull { shape: f64, scale: f64 },
    /// `location` μ and `shape` σ of log-time.
    Lognormal { location: f64, shape: f64 },
    /// `shape` β (dimensionless), `scale` θ in years (the median).
    LogLogistic { shape: f64, scale: f64 },
    /// `shape` θ in 1/years, `rate` λ in 1/years (hazard at t = 0).
    Gompertz { shape: f64, rate: f64 },
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl ModelParams {
    pub fn family(&self) -> ModelFamily {
        match self {
            ModelParams::Exponential { .. } => ModelFamily::Exponential,
            ModelParams::Weibull { .. } => ModelFamily::Weibull,
            ModelParams::Lognormal { .. } => ModelFamily::Lognormal,
            ModelParams::LogLogistic { .. } => ModelFamily::LogLogistic,
            ModelParams::Gompertz { .. } => ModelFamily::Gompertz,
        }
    }

    /// Scalar parameter values in [`ModelFamily::param_names`] order.
    pub fn values(&self) -> ([f64; 2], usize) {
        match *self {
            ModelParams::Exponential { rate } => ([rate, f64::NAN], 1),
            ModelParams::Weibull { shape, scale } => ([shape, scale], 2),
            ModelParams::Lognormal { location, shape } => ([location, shape], 2),
            ModelParams::LogLogistic { shape, scale } => ([shape, scale], 2),
            ModelParams::Gompertz { shape, rate } => ([shape, rate], 2),
        }
    }

    /// Checks the positivity constraints of each family.
    pub fn validate(&self) -> Result<()> {
        let family = self.family();
        let bad = |reason| Err(Error::InvalidParams { family, reason });
        match *self {
            ModelParams::Exponential { rate } if !positive(rate) => bad("rate must be > 0"),
            ModelParams::Weibull { shape, .. } if !positive(shape) => bad("shape must be > 0"),
            ModelParams::Weibull { scale, .. } if !positive(scale) => bad("scale must be > 0"),
            ModelParams::Lognormal { location, .. } if !location.is_finite() => {
                bad("location must be finite")
            }
            ModelParams::Lognormal { shape, .. } if !positive(shape) => bad("shape must be > 0"),
            ModelParams::LogLogistic { shape, .. } if !positive(shape) => bad("shape must be > 0"),
            ModelParams::LogLogistic { scale, .. } if !positive(scale) => bad("scale must be > 0"),
            ModelParams::Gompertz { shape, .. } if !(shape.is_finite() && shape >= 0.0) => {
                bad("shape must be >= 0")
            }
            ModelParams::Gompertz { rate, .. } if !positive(rate) => bad("rate must be > 0"),
            _ => Ok(()),
        }
    }

    /// `ln S(t)` for `t >= 0`. Parameters are assumed valid.
    pub fn ln_survival_unchecked(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            ModelParams::Exponential { rate } => -rate * t,
            ModelParams::Weibull { shape, scale } => -scale * math::powf(t, shape),
            ModelParams::Lognormal { location, shape } => {
                math::norm_ln_sf((math::ln(t) - location) / shape)
            }
            ModelParams::LogLogistic { shape, scale } => {
                -math::ln_1p_exp(shape * (math::ln(t) - math::ln(scale)))
            }
            ModelParams::Gompertz { shape, rate } => -rate * gompertz_integrated(shape, t),
        }
    }

    /// `ln h(t)` for `t > 0` given a precomputed `ln t`.
    pub(crate) fn ln_hazard_with_ln_t(&self, t: f64, ln_t: f64) -> f64 {
        match *self {
            ModelParams::Exponential { rate } => math::ln(rate),
            ModelParams::Weibull { shape, scale } => {
                math::ln(shape) + math::ln(scale) + (shape - 1.0) * ln_t
            }
            ModelParams::Lognormal { location, shape } => {
                let z = (ln_t - location) / shape;
                -0.5 * z * z - math::LN_SQRT_2PI - math::ln(shape) - ln_t - math::norm_ln_sf(z)
            }
            ModelParams::LogLogistic { shape, scale } => {
                let u = shape * (ln_t - math::ln(scale));
                math::ln(shape) - math::ln(scale) + (shape - 1.0) / shape * u - math::ln_1p_exp(u)
            }
            ModelParams::Gompertz { shape, rate } => math::ln(rate) + shape * t,
        }
    }

    /// Log-likelihood contribution `d·ln h(t) + ln S(t)` of one record.
    #[inline]
    pub(crate) fn ln_lik_term(&self, t: f64, ln_t: f64, event: bool) -> f64 {
        let ln_s = match *self {
            // Reuse ln t where the family allows it.
            ModelParams::Weibull { shape, scale } => -scale * math::exp(shape * ln_t),
            ModelParams::Lognormal { location, shape } => {
                math::norm_ln_sf((ln_t - location) / shape)
            }
            _ => self.ln_survival_unchecked(t),
        };
        if event {
            ln_s + self.ln_hazard_with_ln_t(t, ln_t)
        } else {
            ln_s
        }
    }

    /// Survival probability `S(t)`.
    pub fn survival(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !(t >= 0.0) {
            return Err(Error::Domain(alloc::format!("survival requires t >= 0, got {t}")));
        }
        Ok(math::exp(self.ln_survival_unchecked(t)))
    }

    pub fn ln_survival(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !(t >= 0.0) {
            return Err(Error::Domain(alloc::format!("survival requires t >= 0, got {t}")));
        }
        Ok(self.ln_survival_unchecked(t))
    }

    /// `ln h(t)` for `t > 0`.
    pub fn ln_hazard(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !(t > 0.0) {
            return Err(Error::Domain(alloc::format!("hazard requires t > 0, got {t}")));
        }
        Ok(self.ln_hazard_with_ln_t(t, math::ln(t)))
    }

    /// Hazard rate `h(t) = f(t)/S(t)`.
    ///
    /// The Gompertz hazard is also defined at `t = 0`, where it equals `λ`.
    pub fn hazard(&self, t: f64) -> Result<f64> {
        let ln_h = match *self {
            ModelParams::Gompertz { shape, rate } if t == 0.0 => {
                self.validate()?;
                math::ln(rate) + shape * t
            }
            ModelParams::Exponential { rate } if t == 0.0 => {
                self.validate()?;
                math::ln(rate)
            }
            _ => self.ln_hazard(t)?,
        };
        let h = math::exp(ln_h);
        if !h.is_finite() {
            return Err(Error::HazardOverflow { t });
        }
        Ok(h)
    }

    /// `ln f(t) = ln h(t) + ln S(t)` for `t > 0`.
    pub fn log_density(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !(t > 0.0) {
            return Err(Error::Domain(alloc::format!("density requires t > 0, got {t}")));
        }
        Ok(self.ln_density_unchecked(t))
    }

    #[inline]
    pub(crate) fn ln_density_unchecked(&self, t: f64) -> f64 {
        let ln_t = math::ln(t);
        self.ln_hazard_with_ln_t(t, ln_t) + self.ln_survival_unchecked(t)
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        self.log_density(t).map(math::exp)
    }

    /// Population mean survival time in years.
    pub fn mean_survival(&self) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            ModelParams::Exponential { rate } => 1.0 / rate,
            ModelParams::Weibull { shape, scale } => {
                math::exp(-math::ln(scale) / shape + math::ln_gamma(1.0 + 1.0 / shape))
            }
            ModelParams::Lognormal { location, shape } => {
                math::exp(location + 0.5 * shape * shape)
            }
            ModelParams::LogLogistic { shape, scale } => {
                if shape <= 1.0 {
                    return Err(Error::UndefinedMean { shape });
                }
                let a = PI_ / shape;
                scale * a / libm::sin(a)
            }
            ModelParams::Gompertz { shape, rate } => {
                if shape == 0.0 {
                    1.0 / rate
                } else {
                    // (1/θ) e^{λ/θ} Γ(0, λ/θ)
                    math::exp_scaled_e1(rate / shape) / shape
                }
            }
        })
    }

    /// Median survival time in years.
    pub fn median_survival(&self) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            ModelParams::Exponential { rate } => LN2 / rate,
            ModelParams::Weibull { shape, scale } => math::powf(LN2 / scale, 1.0 / shape),
            ModelParams::Lognormal { location, .. } => math::exp(location),
            ModelParams::LogLogistic { scale, .. } => scale,
            ModelParams::Gompertz { shape, rate } => {
                if shape == 0.0 {
                    LN2 / rate
                } else {
                    math::ln_1p(shape / rate * LN2) / shape
                }
            }
        })
    }

    /// Mode of a Gompertz distribution, `(1/θ) ln(θ/λ)`.
    ///
    /// Negative when `θ < λ`, which marks an implausible survival model.
    pub fn gompertz_mode(&self) -> Result<f64> {
        match *self {
            ModelParams::Gompertz { shape, rate } => {
                self.validate()?;
                if shape == 0.0 {
                    return Err(Error::Domain("Gompertz mode needs shape > 0".into()));
                }
                Ok(math::ln(shape / rate) / shape)
            }
            other => Err(Error::Domain(alloc::format!(
                "mode is only provided for the Gompertz family, got {}",
                other.family()
            ))),
        }
    }
}

/// `(e^{θt} − 1)/θ`, tending to `t` as `θ → 0`.
#[inline]
fn gompertz_integrated(shape: f64, t: f64) -> f64 {
    let x = shape * t;
    if x.abs() < 1e-300 {
        t
    } else {
        math::exp_m1(x) / shape
    }
}

#[cfg(test)]
#[path = "../tests/common/quad.rs"]
mod quad;
