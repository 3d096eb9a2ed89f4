//! Kaplan-Meier survival and binned person-time hazard estimates.

use alloc::vec::Vec;

use crate::data::{Arm, SurvivalDataset};
use crate::error::{Error, Result};
use crate::math;

/// Product-limit survival curve. `survival[k]` holds on `[times[k], times[k+1])`
/// and the curve is 1 before `times[0]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepFunction {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub at_risk: Vec<usize>,
    pub events: Vec<usize>,
}

impl StepFunction {
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x <= t);
        if k == 0 {
            1.0
        } else {
            self.survival[k - 1]
        }
    }
}

/// Kaplan-Meier estimate for one arm. Records censored at an event time stay
/// in that time's risk set.
pub fn kaplan_meier(data: &SurvivalDataset, arm: Arm) -> Result<StepFunction> {
    let sample = data.arm(arm);
    sample.non_empty()?;
    let mut obs: Vec<(f64, bool)> = sample.times.iter().copied().zip(sample.events.iter().copied()).collect();
    obs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut out = StepFunction {
        times: Vec::new(),
        survival: Vec::new(),
        at_risk: Vec::new(),
        events: Vec::new(),
    };
    let mut s = 1.0;
    let mut at_risk = obs.len();
    let mut i = 0;
    while i < obs.len() {
        let t = obs[i].0;
        let mut j = i;
        let mut d = 0;
        while j < obs.len() && obs[j].0 == t {
            if obs[j].1 {
                d += 1;
            }
            j += 1;
        }
        if d > 0 {
            s *= 1.0 - d as f64 / at_risk as f64;
            out.times.push(t);
            out.survival.push(s);
            out.at_risk.push(at_risk);
            out.events.push(d);
        }
        at_risk -= j - i;
        i = j;
    }
    Ok(out)
}

/// Piecewise-constant hazard estimates on consecutive bins.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HazardSeries {
    /// `edges.len() == hazard.len() + 1`.
    pub edges: Vec<f64>,
    pub hazard: Vec<f64>,
    /// 95% bounds; `None` for bins without events.
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
    pub events: Vec<usize>,
    pub person_time: Vec<f64>,
}

/// Events over person-time within each bin of width `bin_width`, with
/// `estimate * exp(±1.96 / sqrt(events))` intervals.
pub fn empirical_hazard(data: &SurvivalDataset, arm: Arm, bin_width: f64) -> Result<HazardSeries> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::Validation(alloc::format!("bin width must be > 0, got {bin_width}")));
    }
    let sample = data.arm(arm);
    sample.non_empty()?;
    let t_max = sample.times.iter().copied().fold(0.0, f64::max);
    let n_bins = (libm::ceil(t_max / bin_width) as usize).max(1);
    let mut events = alloc::vec![0usize; n_bins];
    let mut person_time = alloc::vec![0.0; n_bins];

    for (&t, &e) in sample.times.iter().zip(&sample.events) {
        let last = ((libm::ceil(t / bin_width) as usize).max(1) - 1).min(n_bins - 1);
        for (b, pt) in person_time.iter_mut().enumerate().take(last + 1) {
            let lo = b as f64 * bin_width;
            *pt += (t.min(lo + bin_width) - lo).max(0.0);
        }
        if e {
            events[last] += 1;
        }
    }

    let edges = (0..=n_bins).map(|b| b as f64 * bin_width).collect();
    let mut hazard = Vec::with_capacity(n_bins);
    let mut lower = Vec::with_capacity(n_bins);
    let mut upper = Vec::with_capacity(n_bins);
    for (&d, &pt) in events.iter().zip(&person_time) {
        if d == 0 || pt <= 0.0 {
            hazard.push(0.0);
            lower.push(None);
            upper.push(None);
        } else {
            let h = d as f64 / pt;
            let f = math::exp(1.96 / math::sqrt(d as f64));
            hazard.push(h);
            lower.push(Some(h / f));
            upper.push(Some(h * f));
        }
    }
    Ok(HazardSeries {
        edges,
        hazard,
        lower,
        upper,
        events,
        person_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Record;

    fn assert_close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-15, "{a:?} vs {b:?}");
        }
    }

    fn data(rows: &[(f64, bool)]) -> SurvivalDataset {
        SurvivalDataset::new(
            rows.iter()
                .map(|&(time, event)| Record {
                    time,
                    event,
                    arm: Arm::One,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn km_hand_cases() {
        let km = kaplan_meier(&data(&[(1.0, true), (2.0, true), (3.0, true)]), Arm::One).unwrap();
        assert_close(&km.survival, &[2.0 / 3.0, 1.0 / 3.0, 0.0]);

        let km = kaplan_meier(&data(&[(1.0, true), (2.0, false), (3.0, true)]), Arm::One).unwrap();
        assert_eq!(km.times, [1.0, 3.0]);
        assert_close(&km.survival, &[2.0 / 3.0, 0.0]);

        let km = kaplan_meier(&data(&[(1.0, false), (2.0, false)]), Arm::One).unwrap();
        assert!(km.times.is_empty());
        assert_eq!(km.eval(5.0), 1.0);
    }

    #[test]
    fn km_tied_censoring_after_events() {
        // At t = 2: one event and one censoring among 3 at risk.
        let km = kaplan_meier(&data(&[(2.0, true), (2.0, false), (4.0, true)]), Arm::One).unwrap();
        assert_eq!(km.at_risk, [3, 1]);
        assert_close(&km.survival, &[2.0 / 3.0, 0.0]);
        assert_eq!(km.eval(1.9), 1.0);
        assert!((km.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn hazard_single_bin() {
        // 3 events over 20 person-years in one bin of width 10.
        let rows = [(5.0, true), (5.0, true), (5.0, true), (5.0, false)];
        let h = empirical_hazard(&data(&rows), Arm::One, 10.0).unwrap();
        assert_eq!(h.hazard.len(), 1);
        assert!((h.person_time[0] - 20.0).abs() < 1e-12);
        assert!((h.hazard[0] - 0.15).abs() < 1e-15);
        let f = (1.96 / 3f64.sqrt()).exp();
        assert!((h.lower[0].unwrap() - 0.15 / f).abs() < 1e-15);
        assert!((h.upper[0].unwrap() - 0.15 * f).abs() < 1e-15);
    }

    #[test]
    fn hazard_empty_bin_is_marked() {
        let h = empirical_hazard(&data(&[(0.5, true), (2.5, true)]), Arm::One, 1.0).unwrap();
        assert_eq!(h.events, [1, 0, 1]);
        assert_eq!(h.hazard[1], 0.0);
        assert_eq!(h.lower[1], None);
        assert!(empirical_hazard(&data(&[(1.0, true)]), Arm::One, 0.0).is_err());
    }
}
