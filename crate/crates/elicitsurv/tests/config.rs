use std::path::PathBuf;

use elicitsurv::config::{config_to_json, load_config, parse_config, save_config, RunConfig, SchemeConfig};
use elicitsurv_core::{HellingerVariant, ModelFamily, WeightScheme};
use proptest::prelude::*;

fn shipped() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json")
}

#[test]
fn shipped_config_is_the_case_study() {
    let cfg = load_config(&shipped()).unwrap();
    let mut expected = RunConfig::case_study();
    expected.output_dir = "../results".into();
    assert_eq!(cfg, expected);
    assert_eq!(cfg.prior.constraints.mean_cap, Some(50.0));
    let (spec, _) = cfg.prior.build().unwrap();
    assert_eq!((spec.t0, spec.t1), (5.0, 10.0));
}

#[test]
fn unknown_family_lists_the_valid_names() {
    let mut v: serde_json::Value = serde_json::from_str(&config_to_json(&RunConfig::case_study())).unwrap();
    v["families"] = serde_json::json!(["weibull", "gamma"]);
    let err = parse_config(&v.to_string()).unwrap_err();
    assert!(err.contains("families[1]"), "{err}");
    for name in ["exponential", "weibull", "lognormal", "loglogistic", "gompertz"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn schema_errors_carry_the_path() {
    let mut v: serde_json::Value = serde_json::from_str(&config_to_json(&RunConfig::case_study())).unwrap();
    v["prior"]["quantities"][2]["q50"] = serde_json::json!("high");
    let err = parse_config(&v.to_string()).unwrap_err();
    assert!(err.contains("prior.quantities[2].q50"), "{err}");

    v = serde_json::from_str(&config_to_json(&RunConfig::case_study())).unwrap();
    v["n_draw"] = serde_json::json!(10);
    let err = parse_config(&v.to_string()).unwrap_err();
    assert!(err.contains("n_draw"), "{err}");
}

#[test]
fn invalid_values_fail_validation() {
    let mut cfg = RunConfig::case_study();
    cfg.families = vec![ModelFamily::Weibull, ModelFamily::Weibull];
    assert!(cfg.validate().is_err());
    let mut cfg = RunConfig::case_study();
    cfg.prior.quantities[0].q50 = 0.3;
    assert!(cfg.validate().is_err());
    let mut cfg = RunConfig::case_study();
    cfg.hellinger.n = cfg.n_draws + 1;
    assert!(cfg.validate().is_err());
}

fn scheme() -> impl Strategy<Value = SchemeConfig> {
    prop_oneof![
        Just(SchemeConfig::Dilution),
        Just(SchemeConfig::Fixed(WeightScheme::Uniform)),
        Just(SchemeConfig::Fixed(WeightScheme::Jeffreys)),
        Just(SchemeConfig::Fixed(WeightScheme::DimHarmonic)),
        (0.01f64..0.99).prop_map(|f1| SchemeConfig::Fixed(WeightScheme::Anchored { f1 })),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn save_then_load_is_identity(
        seed in any::<u64>(),
        n in 5_000usize..2_000_000,
        mask in 1u8..32,
        scheme in scheme(),
        cap in prop::option::of(10.0f64..200.0),
        width in 0.1f64..2.0,
        marginal in any::<bool>(),
        shift in -0.02f64..0.02,
    ) {
        let mut cfg = RunConfig::case_study();
        cfg.seed = seed;
        cfg.n_draws = n;
        cfg.families = ModelFamily::ALL.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, f)| *f).collect();
        cfg.scheme = scheme;
        cfg.prior.constraints.mean_cap = cap;
        cfg.hazard_bin_width = width;
        cfg.hellinger.variant = if marginal { HellingerVariant::Marginal } else { HellingerVariant::MeanRoot };
        cfg.prior.quantities[2].q50 += shift;

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        save_config(&path, &cfg).unwrap();
        prop_assert_eq!(load_config(&path).unwrap(), cfg);
    }
}
