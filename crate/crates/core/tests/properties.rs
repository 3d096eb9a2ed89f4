mod common;

use common::quad::{integrate, integrate_to_infinity};
use elicitsurv_core::weights::{dilution_from_row_sums, posterior_from_log_bme};
use elicitsurv_core::{
    compute_bme, dilution_prior, hellinger_matrix, run_mh, sample_prior, scheme_prior, transform_to_params, Arm,
    HellingerSettings, MhSettings, ModelFamily, ModelParams, WeightScheme,
};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    prop_oneof![
        (0.02f64..2.0).prop_map(|rate| ModelParams::Exponential { rate }),
        (0.3f64..3.5, 0.01f64..1.0).prop_map(|(shape, scale)| ModelParams::Weibull { shape, scale }),
        (0.0f64..3.0, 0.2f64..2.0).prop_map(|(location, shape)| ModelParams::Lognormal { location, shape }),
        (1.5f64..6.0, 1.0f64..20.0).prop_map(|(shape, scale)| ModelParams::LogLogistic { shape, scale }),
        (0.01f64..0.5, 0.005f64..0.5).prop_map(|(shape, rate)| ModelParams::Gompertz { shape, rate }),
    ]
}

/// A time scale near the bulk of the distribution.
fn bulk(p: &ModelParams) -> f64 {
    p.median_survival().unwrap().max(0.05)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn density_is_hazard_times_survival(p in params(), t in 0.01f64..60.0) {
        let f = p.density(t).unwrap();
        let h = p.hazard(t).unwrap();
        let s = p.survival(t).unwrap();
        prop_assert!(rel_close(f, h * s, 1e-10), "{p:?} t={t}: {f} vs {}", h * s);
    }

    #[test]
    fn survival_starts_at_one_and_never_increases(p in params()) {
        prop_assert_eq!(p.survival(0.0).unwrap(), 1.0);
        let mut prev = 1.0;
        for k in 0..=1000 {
            let s = p.survival(k as f64 * 0.1).unwrap();
            prop_assert!(s <= prev, "{p:?} at t={}", k as f64 * 0.1);
            prev = s;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn density_integrates_to_one(p in params()) {
        let total = integrate_to_infinity(|t| p.density(t).unwrap_or(0.0), 0.0, bulk(&p));
        prop_assert!((total - 1.0).abs() < 1e-6, "{p:?}: {total}");
    }

    #[test]
    fn mean_is_integral_of_survival(p in params()) {
        let mean = p.mean_survival().unwrap();
        let s_int = integrate_to_infinity(|t| p.survival(t).unwrap(), 0.0, bulk(&p));
        let tf_int = integrate_to_infinity(|t| t * p.density(t).unwrap_or(0.0), 0.0, bulk(&p));
        prop_assert!(rel_close(s_int, mean, 1e-4), "{p:?}: {s_int} vs {mean}");
        prop_assert!(rel_close(tf_int, mean, 1e-4), "{p:?}: {tf_int} vs {mean}");
    }

    #[test]
    fn nested_families_reduce_to_exponential(rate in 0.01f64..2.0, t in 0.01f64..50.0) {
        let ex = ModelParams::Exponential { rate };
        let wb = ModelParams::Weibull { shape: 1.0, scale: rate };
        let gz = ModelParams::Gompertz { shape: 1e-12, rate };
        for m in [wb, gz] {
            prop_assert!(rel_close(m.survival(t).unwrap(), ex.survival(t).unwrap(), 1e-6));
            prop_assert!(rel_close(m.density(t).unwrap(), ex.density(t).unwrap(), 1e-6));
            prop_assert!(rel_close(m.hazard(t).unwrap(), ex.hazard(t).unwrap(), 1e-6));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn transform_round_trips_exact_families(s0 in 0.02f64..0.98, ratio in 0.02f64..0.98, t0 in 0.5f64..10.0, gap in 0.5f64..20.0) {
        let (s1, t1) = (s0 * ratio, t0 + gap);
        for family in [ModelFamily::Weibull, ModelFamily::Lognormal, ModelFamily::LogLogistic] {
            let p = transform_to_params(family, s0, s1, t0, t1, 0.0).unwrap().params;
            prop_assert!((p.survival(t0).unwrap() - s0).abs() < 1e-9, "{family} S(t0)");
            prop_assert!((p.survival(t1).unwrap() - s1).abs() < 1e-9, "{family} S(t1)");
        }
        let p = transform_to_params(ModelFamily::Exponential, s0, f64::NAN, t0, t1, 0.0).unwrap().params;
        prop_assert!((p.survival(t0).unwrap() - s0).abs() < 1e-9);
    }

    #[test]
    fn transform_round_trips_gompertz_within_1e_3(s0 in 0.02f64..0.98, ratio in 0.02f64..0.98, t0 in 0.5f64..10.0, gap in 0.5f64..20.0) {
        let (s1, t1) = (s0 * ratio, t0 + gap);
        if let Ok(tp) = transform_to_params(ModelFamily::Gompertz, s0, s1, t0, t1, 0.0) {
            let p = tp.params;
            prop_assert!((p.survival(t0).unwrap() - s0).abs() < 1e-3, "{p:?} S(t0) {} vs {s0}", p.survival(t0).unwrap());
            prop_assert!((p.survival(t1).unwrap() - s1).abs() < 1e-3, "{p:?} S(t1) {} vs {s1}", p.survival(t1).unwrap());
        }
    }

    #[test]
    fn weight_vectors_sum_to_one(
        sums in prop::collection::vec(0.01f64..10.0, 2..8),
        log_bme in prop::collection::vec(-900.0f64..-10.0, 2..8),
        f1 in 0.01f64..0.99,
    ) {
        let n = sums.len().min(log_bme.len());
        let families: Vec<ModelFamily> = (0..n).map(|i| ModelFamily::ALL[i % 5]).collect();
        let dil = dilution_from_row_sums(families, &sums[..n]).unwrap();
        prop_assert!((dil.prior.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let post = posterior_from_log_bme(&dil.prior, &log_bme[..n]).unwrap();
        prop_assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        for scheme in [
            WeightScheme::Uniform,
            WeightScheme::Anchored { f1 },
            WeightScheme::Jeffreys,
            WeightScheme::DimEqual,
            WeightScheme::DimHarmonic,
        ] {
            let t = scheme_prior(scheme, &ModelFamily::ALL).unwrap();
            prop_assert!((t.prior.iter().sum::<f64>() - 1.0).abs() < 1e-12, "{scheme}");
        }
    }
}

#[test]
fn duplicating_a_model_dilutes_its_weight() {
    let spec = common::table1_spec();
    let settings = HellingerSettings {
        j: 1000,
        n: 2000,
        seed: 3,
        ..HellingerSettings::default()
    };
    let ex = sample_prior(ModelFamily::Exponential, &spec, 2000, 1).unwrap();
    let wb = sample_prior(ModelFamily::Weibull, &spec, 2000, 2).unwrap();
    let ln = sample_prior(ModelFamily::Lognormal, &spec, 2000, 3).unwrap();
    let ln_dup = sample_prior(ModelFamily::Lognormal, &spec, 2000, 4).unwrap();

    let base = dilution_prior(&hellinger_matrix(&[&ex, &wb, &ln], Arm::One, &settings).unwrap()).unwrap();
    let dup = dilution_prior(&hellinger_matrix(&[&ex, &wb, &ln, &ln_dup], Arm::One, &settings).unwrap()).unwrap();

    assert!(dup.prior[2] < base.prior[2], "{:?} vs {:?}", dup.prior, base.prior);
    assert_eq!(base.prior[0] < base.prior[1], dup.prior[0] < dup.prior[1]);
}

#[test]
fn fixed_seeds_reproduce_bit_identical_results() {
    let spec = common::table1_spec();
    let data = common::synthetic_20();
    for family in ModelFamily::ALL {
        let a = sample_prior(family, &spec, 5000, 42).unwrap();
        let b = sample_prior(family, &spec, 5000, 42).unwrap();
        assert_eq!(a, b, "{family}");
        let ea = compute_bme(&a, &data, Arm::One, &[1000, 5000]).unwrap();
        let eb = compute_bme(&b, &data, Arm::One, &[1000, 5000]).unwrap();
        assert_eq!(ea.log_bme.to_bits(), eb.log_bme.to_bits());
        assert_eq!(ea, eb);
    }
    let c = sample_prior(ModelFamily::Weibull, &spec, 5000, 43).unwrap();
    assert_ne!(c, sample_prior(ModelFamily::Weibull, &spec, 5000, 42).unwrap());

    let ex = sample_prior(ModelFamily::Exponential, &spec, 500, 1).unwrap();
    let ln = sample_prior(ModelFamily::Lognormal, &spec, 500, 2).unwrap();
    let settings = HellingerSettings {
        j: 200,
        n: 500,
        ..HellingerSettings::default()
    };
    assert_eq!(
        hellinger_matrix(&[&ex, &ln], Arm::One, &settings).unwrap(),
        hellinger_matrix(&[&ex, &ln], Arm::One, &settings).unwrap()
    );

    let mh = MhSettings {
        iterations: 3000,
        burn_in: 1000,
        seed: 9,
        ..MhSettings::default()
    };
    let pa = run_mh(ModelFamily::Weibull, &spec, &data, &mh).unwrap();
    let pb = run_mh(ModelFamily::Weibull, &spec, &data, &mh).unwrap();
    assert_eq!(pa, pb);
}

#[test]
fn survival_gap_integral_matches_difference_of_means() {
    // ∫ (S2 - S1) over [0, ∞) equals the incremental mean.
    let a = ModelParams::Weibull { shape: 1.3, scale: 0.05 };
    let b = ModelParams::Lognormal { location: 1.8, shape: 0.9 };
    let gap = integrate(|t| b.survival(t).unwrap() - a.survival(t).unwrap(), 0.0, 20.0, 1e-12)
        + integrate_to_infinity(|t| b.survival(t).unwrap() - a.survival(t).unwrap(), 20.0, 20.0);
    let expected = b.mean_survival().unwrap() - a.mean_survival().unwrap();
    assert!(rel_close(gap, expected, 1e-6), "{gap} vs {expected}");
}
