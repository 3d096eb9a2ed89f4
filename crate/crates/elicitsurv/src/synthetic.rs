//! Synthetic stand-in for the breast cancer trial data.
//!
//! Event times are lognormal with per-arm parameters near the lognormal
//! posterior means obtained on the real data; follow-up is uniform on
//! 0.7 to 7.3 years. Arm sizes match the real trial (440 and 246).

use elicitsurv_core::{Arm, Record, SurvivalDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// `(records, location, shape)` per arm.
pub const ARMS: [(usize, f64, f64); 2] = [(440, 1.41, 1.09), (246, 1.71, 1.12)];
pub const FOLLOW_UP: (f64, f64) = (0.7, 7.3);

pub fn synthetic_dataset(seed: u64) -> SurvivalDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for (arm, (n, mu, sigma)) in Arm::BOTH.into_iter().zip(ARMS) {
        let z = Normal::new(mu, sigma).expect("valid normal");
        for _ in 0..n {
            let t = z.sample(&mut rng).exp();
            let c = rng.random_range(FOLLOW_UP.0..FOLLOW_UP.1);
            records.push(Record {
                time: t.min(c),
                event: t <= c,
                arm,
            });
        }
    }
    SurvivalDataset::new(records).expect("positive simulated times")
}

/// CSV text in the dataset file format, times in days.
pub fn synthetic_csv(seed: u64) -> String {
    let data = synthetic_dataset(seed);
    let mut out = String::from("id,time,event,arm\n");
    for (i, r) in data.records().iter().enumerate() {
        out.push_str(&format!("{},{},{},{}\n", i + 1, r.time * crate::dataset::DAYS_PER_YEAR, u8::from(r.event), r.arm.number()));
    }
    out
}
