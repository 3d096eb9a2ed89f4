//! Prior model weights and posterior model probabilities.
//!
//! Dilution weights are proportional to each model's summed Hellinger
//! distance to the other models' prior predictive distributions, so models
//! that sit close to others share less weight.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::data::Arm;
use crate::elicitation::{chunk_rng, PriorDraws};
use crate::error::{Error, Result};
use crate::evidence::EvidenceResult;
use crate::math;
use crate::models::ModelFamily;
use crate::par;

/// Monte Carlo estimator of the pairwise Hellinger distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HellingerVariant {
    /// `(1/J) sum_j (mean_i sqrt f_m(y_j | theta_i) - mean_i sqrt f_m'(y_j | theta_i))^2`.
    #[default]
    MeanRoot,
    /// `(y_max/J) sum_j (sqrt(mean_i f_m(y_j | theta_i)) - sqrt(mean_i f_m'(y_j | theta_i)))^2`,
    /// an unbiased-in-`y` estimate of the integral over `[0, y_max]`.
    Marginal,
}

impl fmt::Display for HellingerVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HellingerVariant::MeanRoot => "mean_root",
            HellingerVariant::Marginal => "marginal",
        })
    }
}

impl core::str::FromStr for HellingerVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean_root" => Ok(HellingerVariant::MeanRoot),
            "marginal" => Ok(HellingerVariant::Marginal),
            _ => Err(Error::Validation(format!(
                "unknown Hellinger variant '{s}'; expected mean_root or marginal"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct HellingerSettings {
    /// Uniform survival times drawn on `(0, y_max]`.
    pub j: usize,
    /// Prior draws used per model.
    pub n: usize,
    pub y_max: f64,
    pub seed: u64,
    pub variant: HellingerVariant,
}

impl Default for HellingerSettings {
    fn default() -> Self {
        Self {
            j: 2_000,
            n: 5_000,
            y_max: 100.0,
            seed: 0,
            variant: HellingerVariant::MeanRoot,
        }
    }
}

/// RNG stream for the shared survival times; disjoint from sampler chunks.
const Y_STREAM: u64 = u64::MAX;
const J_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DistanceMatrix {
    pub families: Vec<ModelFamily>,
    pub arm: Arm,
    /// Row-major `M x M`.
    pub distances: Vec<Vec<f64>>,
    pub row_sums: Vec<f64>,
    pub y_max: f64,
    pub j: usize,
    pub n: usize,
    pub variant: HellingerVariant,
}

impl DistanceMatrix {
    /// Builds a matrix from given distances (symmetric, zero diagonal).
    pub fn from_distances(families: Vec<ModelFamily>, arm: Arm, distances: Vec<Vec<f64>>) -> Result<Self> {
        let m = families.len();
        if distances.len() != m || distances.iter().any(|r| r.len() != m) {
            return Err(Error::Validation("distance matrix must be square".into()));
        }
        for i in 0..m {
            if distances[i][i] != 0.0 {
                return Err(Error::Validation("distance matrix diagonal must be zero".into()));
            }
            for k in 0..m {
                let d = distances[i][k];
                if !(d >= 0.0 && d.is_finite()) || d != distances[k][i] {
                    return Err(Error::Validation(
                        "distances must be finite, non-negative and symmetric".into(),
                    ));
                }
            }
        }
        let row_sums = distances.iter().map(|r| r.iter().sum()).collect();
        Ok(Self {
            families,
            arm,
            distances,
            row_sums,
            y_max: f64::NAN,
            j: 0,
            n: 0,
            variant: HellingerVariant::MeanRoot,
        })
    }

    pub fn get(&self, a: ModelFamily, b: ModelFamily) -> Option<f64> {
        let i = self.families.iter().position(|&f| f == a)?;
        let k = self.families.iter().position(|&f| f == b)?;
        Some(self.distances[i][k])
    }
}

/// Per-model summaries of the prior predictive density at each `y_j`:
/// `mean_i sqrt f` for the mean-root variant, `sqrt(mean_i f)` otherwise.
fn predictive_profile(prior: &PriorDraws, arm: Arm, ys: &[f64], n: usize, variant: HellingerVariant) -> Vec<f64> {
    let params: Vec<_> = prior.draws[..n].iter().map(|d| d.arms[arm.index()]).collect();
    let ln_n = math::ln(n as f64);
    par::map_chunks(ys, J_CHUNK, |chunk| {
        chunk
            .iter()
            .map(|&y| match variant {
                HellingerVariant::MeanRoot => {
                    let s: f64 = params
                        .iter()
                        .map(|p| math::exp(0.5 * p.ln_density_unchecked(y)))
                        .sum();
                    s / n as f64
                }
                HellingerVariant::Marginal => {
                    let mut acc = math::LogSumExp::new();
                    for p in &params {
                        acc.push(p.ln_density_unchecked(y));
                    }
                    math::exp(0.5 * (acc.value() - ln_n))
                }
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Pairwise Hellinger distances between the prior predictive distributions
/// of `models` for one arm.
///
/// All models share the same `J` survival times `y_j = y_max (1 - u_j)` and
/// use their first `n` prior draws, so `D(m, m) = 0` and `D(m, m') = D(m', m)`
/// exactly.
pub fn hellinger_matrix(models: &[&PriorDraws], arm: Arm, settings: &HellingerSettings) -> Result<DistanceMatrix> {
    if settings.j == 0 || settings.n == 0 {
        return Err(Error::Validation("J and N must be >= 1".into()));
    }
    if !(settings.y_max > 0.0 && settings.y_max.is_finite()) {
        return Err(Error::Validation(format!("y_max must be > 0, got {}", settings.y_max)));
    }
    for m in models {
        if m.is_empty() {
            return Err(Error::DegeneratePrior);
        }
        if m.len() < settings.n {
            return Err(Error::Validation(format!(
                "{} prior has {} draws, fewer than N = {}",
                m.family,
                m.len(),
                settings.n
            )));
        }
    }

    let mut rng = chunk_rng(settings.seed, Y_STREAM);
    let ys: Vec<f64> = (0..settings.j)
        .map(|_| settings.y_max * (1.0 - rng.random::<f64>()))
        .collect();

    let profiles: Vec<Vec<f64>> = models
        .iter()
        .map(|m| predictive_profile(m, arm, &ys, settings.n, settings.variant))
        .collect();

    let scale = match settings.variant {
        HellingerVariant::MeanRoot => 1.0,
        HellingerVariant::Marginal => settings.y_max,
    } / settings.j as f64;
    let k = models.len();
    let mut distances = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a + 1..k {
            let s: f64 = profiles[a]
                .iter()
                .zip(&profiles[b])
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            distances[a][b] = s * scale;
            distances[b][a] = s * scale;
        }
    }
    let row_sums = distances.iter().map(|r| r.iter().sum()).collect();
    Ok(DistanceMatrix {
        families: models.iter().map(|m| m.family).collect(),
        arm,
        distances,
        row_sums,
        y_max: settings.y_max,
        j: settings.j,
        n: settings.n,
        variant: settings.variant,
    })
}

/// How prior model weights were assigned.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "scheme", rename_all = "snake_case"))]
pub enum WeightScheme {
    Uniform,
    /// The first model gets `f1`; the rest share `1 - f1` equally.
    Anchored { f1: f64 },
    /// `f(m) ∝ 1/(m + 1)` for the `m`-th model (1-based), normalised.
    Jeffreys,
    /// Equal mass per parameter-count class, split equally within a class.
    DimEqual,
    /// Class `s` (ranked by parameter count) gets mass `∝ 1/s`, split equally
    /// within the class.
    DimHarmonic,
    /// Proportional to Hellinger row sums.
    Dilution,
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::Uniform => f.write_str("uniform"),
            WeightScheme::Anchored { f1 } => write!(f, "anchored:{f1}"),
            WeightScheme::Jeffreys => f.write_str("jeffreys"),
            WeightScheme::DimEqual => f.write_str("dim_equal"),
            WeightScheme::DimHarmonic => f.write_str("dim_harmonic"),
            WeightScheme::Dilution => f.write_str("dilution"),
        }
    }
}

impl core::str::FromStr for WeightScheme {
    type Err = Error;

    /// Accepts `uniform`, `jeffreys`, `dim_equal`, `dim_harmonic`, `dilution`
    /// and `anchored:<f1>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(v) = s.strip_prefix("anchored:").or_else(|| s.strip_prefix("anchored=")) {
            let f1: f64 = v
                .parse()
                .map_err(|_| Error::Validation(format!("invalid anchored weight '{v}'")))?;
            return Ok(WeightScheme::Anchored { f1 });
        }
        match s {
            "uniform" => Ok(WeightScheme::Uniform),
            "jeffreys" => Ok(WeightScheme::Jeffreys),
            "dim_equal" => Ok(WeightScheme::DimEqual),
            "dim_harmonic" => Ok(WeightScheme::DimHarmonic),
            "dilution" => Ok(WeightScheme::Dilution),
            _ => Err(Error::Validation(format!(
                "unknown weight scheme '{s}'; expected uniform, anchored:<f1>, jeffreys, dim_equal, dim_harmonic or dilution"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightTable {
    pub families: Vec<ModelFamily>,
    pub scheme: WeightScheme,
    pub prior: Vec<f64>,
    /// Filled by [`posterior_model_probs`].
    pub log_bme: Option<Vec<f64>>,
    pub posterior: Option<Vec<f64>>,
}

impl WeightTable {
    pub fn prior_of(&self, family: ModelFamily) -> Option<f64> {
        let i = self.families.iter().position(|&f| f == family)?;
        Some(self.prior[i])
    }

    pub fn posterior_of(&self, family: ModelFamily) -> Option<f64> {
        let i = self.families.iter().position(|&f| f == family)?;
        self.posterior.as_ref().map(|p| p[i])
    }
}

fn normalise(w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Weights `a_m / sum a`, from raw row sums.
pub fn dilution_from_row_sums(families: Vec<ModelFamily>, row_sums: &[f64]) -> Result<WeightTable> {
    if families.len() < 2 || families.len() != row_sums.len() {
        return Err(Error::Validation(
            "dilution weights need at least two models and one row sum per model".into(),
        ));
    }
    if row_sums.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
        return Err(Error::Validation("row sums must be finite and non-negative".into()));
    }
    if row_sums.iter().all(|&a| a == 0.0) {
        return Err(Error::DegenerateWeights);
    }
    Ok(WeightTable {
        families,
        scheme: WeightScheme::Dilution,
        prior: normalise(row_sums),
        log_bme: None,
        posterior: None,
    })
}

pub fn dilution_prior(dist: &DistanceMatrix) -> Result<WeightTable> {
    dilution_from_row_sums(dist.families.clone(), &dist.row_sums)
}

/// Non-informative prior weights for `models`, in the given order.
pub fn scheme_prior(scheme: WeightScheme, models: &[ModelFamily]) -> Result<WeightTable> {
    let m = models.len();
    if m == 0 {
        return Err(Error::Validation("no models given".into()));
    }
    let by_class = |class_mass: &dyn Fn(usize) -> f64| {
        let mut dims: Vec<usize> = models.iter().map(|f| f.n_params()).collect();
        dims.sort_unstable();
        dims.dedup();
        let raw: Vec<f64> = models
            .iter()
            .map(|f| {
                let rank = dims.iter().position(|&d| d == f.n_params()).unwrap_or(0) + 1;
                let members = models.iter().filter(|g| g.n_params() == f.n_params()).count();
                class_mass(rank) / members as f64
            })
            .collect();
        normalise(&raw)
    };
    let prior = match scheme {
        WeightScheme::Uniform => vec![1.0 / m as f64; m],
        WeightScheme::Anchored { f1 } => {
            if !(f1 > 0.0 && f1 < 1.0) {
                return Err(Error::Validation(format!("anchored weight must lie in (0, 1), got {f1}")));
            }
            if m < 2 {
                return Err(Error::Validation("anchored weights need at least two models".into()));
            }
            let mut w = vec![(1.0 - f1) / (m - 1) as f64; m];
            w[0] = f1;
            w
        }
        WeightScheme::Jeffreys => normalise(&(1..=m).map(|i| 1.0 / (i + 1) as f64).collect::<Vec<_>>()),
        WeightScheme::DimEqual => by_class(&|_| 1.0),
        WeightScheme::DimHarmonic => by_class(&|rank| 1.0 / rank as f64),
        WeightScheme::Dilution => {
            return Err(Error::Validation(
                "dilution weights need a distance matrix; use dilution_prior".into(),
            ))
        }
    };
    Ok(WeightTable {
        families: models.to_vec(),
        scheme,
        prior,
        log_bme: None,
        posterior: None,
    })
}

/// `f(m | D) ∝ f(m) f_m(D)`, computed from log evidences.
pub fn posterior_from_log_bme(prior: &[f64], log_bme: &[f64]) -> Result<Vec<f64>> {
    if prior.len() != log_bme.len() || prior.is_empty() {
        return Err(Error::Validation("one evidence per model is required".into()));
    }
    let terms: Vec<f64> = prior
        .iter()
        .zip(log_bme)
        .map(|(&w, &l)| if w > 0.0 { math::ln(w) + l } else { f64::NEG_INFINITY })
        .collect();
    let total = math::log_sum_exp(&terms);
    if !total.is_finite() {
        return Err(Error::ZeroEvidence);
    }
    Ok(terms.iter().map(|t| math::exp(t - total)).collect())
}

/// Posterior model probabilities for the models of `prior`, taking each
/// model's evidence from `evidences` by family.
pub fn posterior_model_probs(prior: &WeightTable, evidences: &[EvidenceResult]) -> Result<WeightTable> {
    let first_scope = evidences.first().map(|e| e.scope);
    if evidences.iter().any(|e| Some(e.scope) != first_scope) {
        return Err(Error::Validation("evidences cover different data".into()));
    }
    let log_bme = prior
        .families
        .iter()
        .map(|f| {
            let mut it = evidences.iter().filter(|e| e.family == *f);
            match (it.next(), it.next()) {
                (Some(e), None) => Ok(e.log_bme),
                (None, _) => Err(Error::Validation(format!("no evidence for {f}"))),
                _ => Err(Error::Validation(format!("more than one evidence for {f}"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if evidences.len() != log_bme.len() {
        return Err(Error::Validation("evidence given for a model without prior weight".into()));
    }
    let posterior = posterior_from_log_bme(&prior.prior, &log_bme)?;
    Ok(WeightTable {
        log_bme: Some(log_bme),
        posterior: Some(posterior),
        ..prior.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ModelFamily::*;

    const FIVE: [ModelFamily; 5] = ModelFamily::ALL;

    #[test]
    fn schemes() {
        let u = scheme_prior(WeightScheme::Uniform, &FIVE).unwrap();
        assert!(u.prior.iter().all(|&w| w == 0.2));

        let j = scheme_prior(WeightScheme::Jeffreys, &[Exponential, Weibull, Gompertz]).unwrap();
        for (w, e) in j.prior.iter().zip([6.0 / 13.0, 4.0 / 13.0, 3.0 / 13.0]) {
            assert!((w - e).abs() < 1e-15);
        }

        let d = scheme_prior(WeightScheme::DimEqual, &FIVE).unwrap();
        assert!((d.prior[0] - 0.5).abs() < 1e-15);
        assert!(d.prior[1..].iter().all(|w| (w - 0.125).abs() < 1e-15));

        let h = scheme_prior(WeightScheme::DimHarmonic, &FIVE).unwrap();
        assert!((h.prior[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!(h.prior[1..].iter().all(|w| (w - 1.0 / 12.0).abs() < 1e-15));

        let a = scheme_prior(WeightScheme::Anchored { f1: 0.6 }, &FIVE).unwrap();
        assert_eq!(a.prior[0], 0.6);
        assert!((a.prior[4] - 0.1).abs() < 1e-15);
        assert!(scheme_prior(WeightScheme::Anchored { f1: 1.0 }, &FIVE).is_err());
    }

    #[test]
    fn dilution_examples() {
        let t = dilution_from_row_sums(FIVE.to_vec(), &[1.475, 0.727, 1.061, 1.340, 1.844]).unwrap();
        for (w, e) in t.prior.iter().zip([0.2288, 0.1128, 0.1646, 0.2078, 0.2860]) {
            assert!((w - e).abs() < 5e-4, "{w} vs {e}");
        }

        let dm = DistanceMatrix::from_distances(
            alloc::vec![Exponential, Weibull, Gompertz],
            Arm::One,
            alloc::vec![
                alloc::vec![0.0, 0.0, 1.0],
                alloc::vec![0.0, 0.0, 1.0],
                alloc::vec![1.0, 1.0, 0.0],
            ],
        )
        .unwrap();
        assert_eq!(dilution_prior(&dm).unwrap().prior, [0.25, 0.25, 0.5]);

        let zero = DistanceMatrix::from_distances(alloc::vec![Exponential, Weibull], Arm::One, alloc::vec![alloc::vec![0.0; 2]; 2])
            .unwrap();
        assert_eq!(dilution_prior(&zero), Err(Error::DegenerateWeights));
    }

    #[test]
    fn posterior_probabilities() {
        let p = posterior_from_log_bme(&[0.2; 5], &[-3.0; 5]).unwrap();
        assert!(p.iter().all(|x| (x - 0.2).abs() < 1e-15));

        let p = posterior_from_log_bme(&[0.2; 5], &[-100.0, -150.0, -150.0, -150.0, -150.0]).unwrap();
        assert!(p[0] >= 1.0 - 1e-15);

        let shifted = posterior_from_log_bme(&[0.1, 0.2, 0.7], &[1.0, 2.0, 3.0]).unwrap();
        let base = posterior_from_log_bme(&[0.1, 0.2, 0.7], &[-999.0, -998.0, -997.0]).unwrap();
        for (a, b) in shifted.iter().zip(&base) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn scheme_names_parse() {
        assert_eq!("dim_harmonic".parse::<WeightScheme>().unwrap(), WeightScheme::DimHarmonic);
        assert_eq!("anchored:0.4".parse::<WeightScheme>().unwrap(), WeightScheme::Anchored { f1: 0.4 });
        assert!("bogus".parse::<WeightScheme>().is_err());
    }
}
