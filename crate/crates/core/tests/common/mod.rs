#![allow(dead_code)]

pub mod quad;

use elicitsurv_core::{
    DistKind, ElicitedQuantity, PriorSpec, QuantityName, Quartiles, SurvivalDataset,
};

pub fn quantity(name: QuantityName, q25: f64, q50: f64, q75: f64) -> ElicitedQuantity {
    ElicitedQuantity::fit(name, Quartiles::new(q25, q50, q75), name.default_kind())
        .unwrap()
        .0
}

pub fn point(name: QuantityName, v: f64) -> ElicitedQuantity {
    ElicitedQuantity::fit(name, Quartiles::new(v, v, v), DistKind::Beta).unwrap().0
}

/// Elicited quartiles at 5 and 10 years.
pub fn table1_spec() -> PriorSpec {
    PriorSpec::new(
        5.0,
        10.0,
        vec![
            quantity(QuantityName::S1T0, 0.37, 0.40, 0.45),
            quantity(QuantityName::Delta11, 0.26, 0.30, 0.35),
            quantity(QuantityName::Delta21, 0.01, 0.05, 0.10),
            quantity(QuantityName::Delta22, 0.25, 0.30, 0.37),
        ],
    )
    .unwrap()
}

/// Beta(27.09, 39.58)-like S1(t0) with both arms identical (delta21 = 0), so
/// the exponential arm-1 rate has the closed-form induced prior density.
pub fn exponential_oracle_spec() -> PriorSpec {
    PriorSpec::new(
        5.0,
        10.0,
        vec![
            quantity(QuantityName::S1T0, 0.37, 0.40, 0.45),
            quantity(QuantityName::Delta11, 0.26, 0.30, 0.35),
            point(QuantityName::Delta21, 0.0),
            quantity(QuantityName::Delta22, 0.25, 0.30, 0.37),
        ],
    )
    .unwrap()
}

/// 20 arm-1 records in years, administratively censored at 8.
pub fn synthetic_20() -> SurvivalDataset {
    let times = [
        0.42, 0.91, 1.37, 1.88, 2.05, 2.63, 3.10, 3.47, 3.95, 4.40, 4.86, 5.31, 5.90, 6.44, 7.02, 7.55, 8.0,
        8.0, 8.0, 8.0,
    ];
    let events: Vec<bool> = times.iter().enumerate().map(|(i, &t)| t < 8.0 && i % 5 != 3).collect();
    SurvivalDataset::single_arm(&times, &events).unwrap()
}

/// `ln L(lambda)` of arm 1 under an exponential model.
pub fn exponential_ln_lik(data: &SurvivalDataset, lambda: f64) -> f64 {
    let s = data.arm(elicitsurv_core::Arm::One);
    let d = s.n_events() as f64;
    let total: f64 = s.times.iter().sum();
    d * lambda.ln() - lambda * total
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// One-sample Kolmogorov-Smirnov distance against `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut xs = xs.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
