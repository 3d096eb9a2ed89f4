//! JSON run configuration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use elicitsurv_core::{
    BicSampleSize, ConstraintSet, DistKind, ElicitedQuantity, FitReport, HellingerSettings, MhSettings, ModelFamily,
    PriorSpec, QuantityName, Quartiles, WeightScheme,
};
use serde::{Deserialize, Serialize};

use crate::dataset::TimeUnit;
use crate::error::{AppError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Relative paths resolve against the config file's directory.
    pub path: PathBuf,
    #[serde(default)]
    pub unit: TimeUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantityConfig {
    pub name: QuantityName,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    /// Defaults to normal for delta21 and beta otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistKind>,
}

impl QuantityConfig {
    pub fn quartiles(&self) -> Quartiles {
        Quartiles::new(self.q25, self.q50, self.q75)
    }

    pub fn fit(&self) -> Result<(ElicitedQuantity, FitReport)> {
        let kind = self.distribution.unwrap_or(self.name.default_kind());
        ElicitedQuantity::fit(self.name, self.quartiles(), kind).map_err(|e| AppError::Validation(format!("elicitation: {}: {e}", self.name)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub t0: f64,
    pub t1: f64,
    #[serde(default)]
    pub x0: f64,
    pub quantities: Vec<QuantityConfig>,
    #[serde(default)]
    pub constraints: ConstraintSet,
}

impl PriorConfig {
    /// Fits every quantity and assembles the prior spec.
    pub fn build(&self) -> Result<(PriorSpec, Vec<FitReport>)> {
        let mut quantities = Vec::new();
        let mut reports = Vec::new();
        for q in &self.quantities {
            let (eq, report) = q.fit()?;
            quantities.push(eq);
            reports.push(report);
        }
        let mut spec = PriorSpec::new(self.t0, self.t1, quantities).map_err(AppError::core("elicitation"))?;
        spec.x0 = self.x0;
        spec.constraints = self.constraints;
        spec.validate().map_err(AppError::core("elicitation"))?;
        Ok((spec, reports))
    }
}

fn default_families() -> Vec<ModelFamily> {
    ModelFamily::ALL.to_vec()
}
fn default_n_draws() -> usize {
    1_000_000
}
fn default_seed() -> u64 {
    20_240_601
}
fn default_scheme() -> SchemeConfig {
    SchemeConfig::Dilution
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}
fn default_bin_width() -> f64 {
    0.5
}
fn default_horizon() -> f64 {
    30.0
}

/// Prior model weights: the Hellinger dilution prior or one of the fixed
/// schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeConfig {
    Dilution,
    Fixed(WeightScheme),
}

impl std::str::FromStr for SchemeConfig {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("dilution") {
            return Ok(SchemeConfig::Dilution);
        }
        s.parse::<WeightScheme>().map(SchemeConfig::Fixed).map_err(|e| e.to_string())
    }
}

impl std::fmt::Display for SchemeConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SchemeConfig::Dilution => f.write_str("dilution"),
            SchemeConfig::Fixed(s) => write!(f, "{s}"),
        }
    }
}

impl Serialize for SchemeConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SchemeConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `None` runs on the synthetic stand-in dataset.
    #[serde(default)]
    pub dataset: Option<DatasetConfig>,
    pub prior: PriorConfig,
    #[serde(default = "default_families")]
    pub families: Vec<ModelFamily>,
    /// Prior draws per family, used for evidence and prior summaries.
    #[serde(default = "default_n_draws")]
    pub n_draws: usize,
    #[serde(default)]
    pub hellinger: HellingerSettings,
    #[serde(default)]
    pub mh: MhSettings,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub bic_sample_size: BicSampleSize,
    #[serde(default = "default_bin_width")]
    pub hazard_bin_width: f64,
    /// Upper end of the survival-curve grid, years.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Elicited quartiles at 5 and 10 years with default settings.
    pub fn case_study() -> Self {
        let q = |name, q25, q50, q75| QuantityConfig {
            name,
            q25,
            q50,
            q75,
            distribution: None,
        };
        RunConfig {
            dataset: Some(DatasetConfig {
                path: PathBuf::from("../data/gbsg.csv"),
                unit: TimeUnit::Days,
            }),
            prior: PriorConfig {
                t0: 5.0,
                t1: 10.0,
                x0: 0.0,
                quantities: vec![
                    q(QuantityName::S1T0, 0.37, 0.40, 0.45),
                    q(QuantityName::Delta11, 0.26, 0.30, 0.35),
                    q(QuantityName::Delta21, 0.01, 0.05, 0.10),
                    q(QuantityName::Delta22, 0.25, 0.30, 0.37),
                ],
                constraints: ConstraintSet::default(),
            },
            families: default_families(),
            n_draws: default_n_draws(),
            hellinger: HellingerSettings::default(),
            mh: MhSettings::default(),
            scheme: default_scheme(),
            bic_sample_size: BicSampleSize::default(),
            hazard_bin_width: default_bin_width(),
            horizon: default_horizon(),
            seed: default_seed(),
            output_dir: default_output_dir(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(AppError::Validation(format!("config: {m}")));
        if self.families.is_empty() {
            return fail("families must not be empty".into());
        }
        let unique: BTreeSet<_> = self.families.iter().collect();
        if unique.len() != self.families.len() {
            return fail("families must not repeat".into());
        }
        if self.n_draws == 0 {
            return fail("n_draws must be >= 1".into());
        }
        if self.hellinger.j == 0 || self.hellinger.n == 0 {
            return fail("hellinger.j and hellinger.n must be >= 1".into());
        }
        if self.hellinger.n > self.n_draws {
            return fail(format!(
                "hellinger.n ({}) cannot exceed n_draws ({})",
                self.hellinger.n, self.n_draws
            ));
        }
        if !(self.hellinger.y_max > 0.0 && self.hellinger.y_max.is_finite()) {
            return fail("hellinger.y_max must be > 0".into());
        }
        self.mh.validate().map_err(AppError::core("posterior"))?;
        if !(self.hazard_bin_width > 0.0 && self.horizon > 0.0) {
            return fail("hazard_bin_width and horizon must be > 0".into());
        }
        self.prior.build()?;
        Ok(())
    }

    /// The dataset path, resolved against `base` when relative.
    pub fn dataset_path(&self, base: &Path) -> Option<PathBuf> {
        self.dataset.as_ref().map(|d| if d.path.is_absolute() { d.path.clone() } else { base.join(&d.path) })
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            e.inner().to_string()
        } else {
            format!("at `{path}`: {}", e.inner())
        }
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(AppError::io(path))?;
    let cfg = parse_config(&text).map_err(|message| AppError::Input {
        path: path.to_path_buf(),
        message,
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn config_to_json(cfg: &RunConfig) -> String {
    let mut s = serde_json::to_string_pretty(cfg).expect("config serializes");
    s.push('\n');
    s
}

pub fn save_config(path: &Path, cfg: &RunConfig) -> Result<()> {
    crate::output::write_atomic(path, config_to_json(cfg).as_bytes())
}
