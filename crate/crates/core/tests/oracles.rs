//! Monte Carlo estimators checked against independent quadrature and
//! closed-form values.

mod common;

use common::quad::{integrate, integrate_to_infinity};
use common::{exponential_ln_lik, exponential_oracle_spec, ks_one_sample, ks_two_sample, point, synthetic_20};
use elicitsurv_core::{
    compute_bme, exact_exponential_prior_density, hellinger_matrix, information_criteria, kaplan_meier, mle_fit,
    run_mh, sample_prior, snis_check, Arm, BicSampleSize, ConstraintSet, FittedDist, HellingerSettings,
    HellingerVariant, MhSettings, ModelFamily, ModelParams, PriorSpec, QuantityName, Record, SurvivalDataset,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn s1_beta(spec: &PriorSpec) -> (f64, f64) {
    match spec.quantity(QuantityName::S1T0).unwrap().distribution {
        FittedDist::Beta { alpha, beta } => (alpha, beta),
        d => panic!("{d:?}"),
    }
}

/// `ln ∫ g(λ) L(λ) f_Λ(λ) dλ` for the exponential arm-1 model.
fn ln_exponential_posterior_integral<G: Fn(f64) -> f64>(spec: &PriorSpec, data: &SurvivalDataset, g: G) -> f64 {
    let (a, b) = s1_beta(spec);
    let shift = exponential_ln_lik(data, 0.2);
    let integrand = |lam: f64| {
        if lam <= 0.0 {
            return 0.0;
        }
        g(lam) * (exponential_ln_lik(data, lam) - shift).exp() * exact_exponential_prior_density(lam, a, b, 5.0).unwrap()
    };
    integrate(integrand, 1e-9, 2.0, 1e-14).ln() + shift
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

#[test]
fn bme_matches_quadrature_and_converges() {
    let spec = exponential_oracle_spec();
    let data = synthetic_20();
    let oracle = ln_exponential_posterior_integral(&spec, &data, |_| 1.0);

    let prior = sample_prior(ModelFamily::Exponential, &spec, 1_000_000, 11).unwrap();
    let res = compute_bme(&prior, &data, Arm::One, &[1000, 10_000, 100_000, 1_000_000]).unwrap();
    let errs: Vec<f64> = res.convergence_trace.iter().map(|p| (p.log_bme - oracle).exp_m1().abs()).collect();
    println!("oracle ln BME {oracle:.6}, MC {:.6}, trace errors {errs:?}", res.log_bme);
    assert!(rel_err(res.log_bme.exp(), oracle.exp()) < 0.01);
    assert!(errs[3] < errs[0]);
    assert!(res.mc_standard_error < 0.01);
}

#[test]
fn exact_exponential_prior_density_checks() {
    for lam in [0.1, 0.5, 1.0, 3.0] {
        let f = exact_exponential_prior_density(lam, 1.0, 1.0, 1.0).unwrap();
        assert!((f - (-lam).exp()).abs() < 1e-14);
    }
    let total = integrate_to_infinity(|l| exact_exponential_prior_density(l, 27.09, 39.58, 5.0).unwrap_or(0.0), 0.0, 0.2);
    assert!((total - 1.0).abs() < 1e-3, "{total}");
}

#[test]
fn sampled_exponential_rates_follow_the_exact_density() {
    let spec = exponential_oracle_spec();
    let (a, b) = s1_beta(&spec);
    let prior = sample_prior(ModelFamily::Exponential, &spec, 1_000_000, 5).unwrap();
    let mut rates: Vec<f64> = prior
        .params(Arm::One)
        .map(|p| match *p {
            ModelParams::Exponential { rate } => rate,
            _ => unreachable!(),
        })
        .collect();
    rates.sort_by(f64::total_cmp);
    // CDF by accumulating quadrature between consecutive sorted draws.
    let lo = rates[0];
    let density = |l: f64| exact_exponential_prior_density(l, a, b, 5.0).unwrap();
    let mut cdf = integrate(density, 1e-9, lo, 1e-13);
    let n = rates.len() as f64;
    let mut ks = 0.0f64;
    let mut prev = lo;
    for (i, &r) in rates.iter().enumerate() {
        if r > prev {
            cdf += integrate(density, prev, r, 1e-13);
            prev = r;
        }
        ks = ks.max((cdf - i as f64 / n).abs()).max(((i + 1) as f64 / n - cdf).abs());
    }
    println!("KS distance {ks:.5}");
    assert!(ks < 0.01);
}

#[test]
fn inequality_only_sampling_adds_no_distortion() {
    // The inequalities alone shift the S1(t0) marginal (about 22% of raw
    // draws fail them), so the reference is direct simulation of the fitted
    // distributions filtered by the same inequalities.
    let mut spec = common::table1_spec();
    spec.constraints = ConstraintSet::inequalities_only();
    let prior = sample_prior(ModelFamily::Weibull, &spec, 1_000_000, 8).unwrap();
    let s1: Vec<f64> = prior.draws.iter().map(|d| d.quantities[0]).collect();

    let dists = spec.distributions().unwrap();
    let beta = |i: usize| match dists[i] {
        FittedDist::Beta { alpha, beta } => rand_distr::Beta::new(alpha, beta).unwrap(),
        d => panic!("{d:?}"),
    };
    let (b_s1, b_d11, b_d22) = (beta(0), beta(1), beta(3));
    let FittedDist::Normal { mean, sd } = dists[2] else { panic!() };
    let n_d21 = rand_distr::Normal::new(mean, sd).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let mut reference = Vec::with_capacity(1_000_000);
    let mut raw = 0usize;
    while reference.len() < 1_000_000 {
        raw += 1;
        let (s, d11, d21, d22) = (
            rng.sample(b_s1),
            rng.sample(b_d11),
            rng.sample(n_d21),
            rng.sample(b_d22),
        );
        if s + d21 > 0.0 && 1.0 - s - d21 > 0.0 && s - d11 > 0.0 && s + d21 - d22 > 0.0 {
            reference.push(s);
        }
    }
    let ks = ks_two_sample(&s1, &reference);
    let unfiltered = ks_one_sample(&s1, |x| dists[0].cdf(x));
    println!("KS vs filtered simulation {ks:.5}; vs unfiltered Beta {unfiltered:.5}; pass rate {:.4}", 1e6 / raw as f64);
    assert!(ks < 0.01);
    assert!((prior.draw_efficiency - 1e6 / raw as f64).abs() < 0.005);
}

#[test]
fn hellinger_marginal_matches_closed_form() {
    let spec_for = |rate: f64| {
        PriorSpec::new(
            5.0,
            10.0,
            vec![
                point(QuantityName::S1T0, (-5.0 * rate).exp()),
                point(QuantityName::Delta11, 0.0),
                point(QuantityName::Delta21, 0.0),
                point(QuantityName::Delta22, 0.0),
            ],
        )
        .unwrap()
    };
    let one = sample_prior(ModelFamily::Exponential, &spec_for(1.0), 10, 1).unwrap();
    let two = sample_prior(ModelFamily::Exponential, &spec_for(2.0), 10, 1).unwrap();
    // Integrand mass sits below y = 20; the MC sd is about 0.25/sqrt(J) here.
    let settings = HellingerSettings {
        j: 400_000,
        n: 10,
        y_max: 40.0,
        seed: 17,
        variant: HellingerVariant::Marginal,
    };
    let dm = hellinger_matrix(&[&one, &two], Arm::One, &settings).unwrap();
    let d = dm.distances[0][1];
    let exact = 2.0 - 4.0 * 2f64.sqrt() / 3.0;
    println!("Hellinger {d:.6} vs {exact:.6}");
    assert!(rel_err(d, exact) < 0.02);
    assert_eq!(dm.distances[0][0], 0.0);
}

#[test]
fn posterior_mean_rate_matches_quadrature() {
    let spec = exponential_oracle_spec();
    let data = synthetic_20();
    let ln_z = ln_exponential_posterior_integral(&spec, &data, |_| 1.0);
    let oracle = (ln_exponential_posterior_integral(&spec, &data, |l| l) - ln_z).exp();

    let settings = MhSettings {
        iterations: 30_000,
        burn_in: 5_000,
        seed: 21,
        ..MhSettings::default()
    };
    let post = run_mh(ModelFamily::Exponential, &spec, &data, &settings).unwrap();
    let rate = |p: &ModelParams| match *p {
        ModelParams::Exponential { rate } => rate,
        _ => unreachable!(),
    };
    let mh = post.draws.iter().map(|d| rate(&d.arms[0])).sum::<f64>() / post.draws.len() as f64;
    println!("posterior mean rate: MH {mh:.6}, quadrature {oracle:.6}, acceptance {:?}", post.acceptance_rates);
    assert!(rel_err(mh, oracle) < 0.01);
    assert!(post.warnings.is_empty(), "{:?}", post.warnings);

    let prior = sample_prior(ModelFamily::Exponential, &spec, 200_000, 4).unwrap();
    let snis = snis_check(&prior, &data, Arm::One, &[5.0]).unwrap();
    assert!(snis.effective_sample_size / snis.n as f64 > 0.05);
    let est = snis.expectation(&prior, |d| rate(&d.arms[0]));
    println!("SNIS {est:.6}, ESS {:.0}", snis.effective_sample_size);
    assert!(rel_err(est, oracle) < 0.02);
}

#[test]
fn empty_data_posterior_is_the_prior() {
    let spec = common::table1_spec();
    let empty = SurvivalDataset::new(Vec::new()).unwrap();
    let settings = MhSettings {
        iterations: 125_000,
        burn_in: 25_000,
        thin: 4,
        seed: 2,
        ..MhSettings::default()
    };
    let post = run_mh(ModelFamily::Weibull, &spec, &empty, &settings).unwrap();
    assert_eq!(post.draws.len(), 100_000);
    let prior = sample_prior(ModelFamily::Weibull, &spec, 100_000, 6).unwrap();
    for arm in 0..2 {
        for k in 0..2 {
            let a: Vec<f64> = post.draws.iter().map(|d| d.arms[arm].values().0[k]).collect();
            let b: Vec<f64> = prior.draws.iter().map(|d| d.arms[arm].values().0[k]).collect();
            let ks = ks_two_sample(&a, &b);
            println!("arm {} param {k}: KS {ks:.4}", arm + 1);
            assert!(ks < 0.02);
        }
    }
}

#[test]
fn mean_and_mode_closed_forms() {
    let ll = ModelParams::LogLogistic { shape: 2.0, scale: 5.0 };
    let q = integrate_to_infinity(|t| ll.survival(t).unwrap(), 0.0, 5.0);
    assert!(rel_err(ll.mean_survival().unwrap(), q) < 1e-8);
    assert!(rel_err(q, 5.0 * std::f64::consts::PI / 2.0) < 1e-8);

    let gz = ModelParams::Gompertz { shape: 0.1, rate: 0.1 };
    let q = integrate_to_infinity(|t| gz.survival(t).unwrap(), 0.0, 5.0);
    assert!(rel_err(gz.mean_survival().unwrap(), q) < 1e-8);
    assert!((q - 5.9635).abs() < 1e-4);

    let gz = ModelParams::Gompertz { shape: 0.2, rate: 0.1 };
    let argmax = (0..200_000)
        .map(|i| i as f64 * 1e-4)
        .max_by(|a, b| gz.density(a.max(1e-12)).unwrap().total_cmp(&gz.density(b.max(1e-12)).unwrap()))
        .unwrap();
    assert!((gz.gompertz_mode().unwrap() - argmax).abs() < 2e-4);
    assert!((argmax - 5.0 * 2f64.ln()).abs() < 2e-4);
}

#[test]
fn weibull_mle_recovers_unit_shape() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let times: Vec<f64> = (0..5000).map(|_| -(1.0 - rng.random::<f64>()).ln() / 0.2).collect();
    let data = SurvivalDataset::single_arm(&times, &vec![true; 5000]).unwrap();
    let fit = mle_fit(ModelFamily::Weibull, &data, Arm::One).unwrap();
    let ModelParams::Weibull { shape, .. } = fit.params else { panic!() };
    assert!(shape > 0.95 && shape < 1.05, "{shape}");
    assert!(fit.converged);
}

#[test]
fn exponential_information_criteria_are_exact() {
    let data = SurvivalDataset::single_arm(&[2.0, 3.0, 5.0], &[true, true, true]).unwrap();
    let fit = mle_fit(ModelFamily::Exponential, &data, Arm::One).unwrap();
    let ll = 3.0 * 0.3f64.ln() - 3.0;
    assert!((fit.log_likelihood - ll).abs() < 1e-9);
    let c = information_criteria(&fit, BicSampleSize::Events).unwrap();
    assert!((c.aic - (-2.0 * ll + 2.0)).abs() < 1e-9);
    assert!((c.bic - (-2.0 * ll + 3f64.ln())).abs() < 1e-9);
}

#[test]
fn kaplan_meier_hand_cases() {
    let rec = |time, event| Record { time, event, arm: Arm::One };
    let data = SurvivalDataset::new(vec![rec(1.0, true), rec(2.0, false), rec(3.0, true), rec(3.0, true), rec(4.0, false)]).unwrap();
    let km = kaplan_meier(&data, Arm::One).unwrap();
    assert_eq!(km.times, [1.0, 3.0]);
    assert_eq!(km.at_risk, [5, 3]);
    assert_eq!(km.survival[0], 0.8);
    assert!((km.survival[1] - 0.8 / 3.0).abs() < 1e-15);
    assert_eq!(km.eval(10.0), km.survival[1]);
}
