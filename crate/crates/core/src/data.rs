//! Censored time-to-event records.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math;

/// Treatment arm. Arm 1 is the control (no treatment) arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "u8", into = "u8"))]
pub enum Arm {
    One,
    Two,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::One, Arm::Two];

    pub const fn index(self) -> usize {
        match self {
            Arm::One => 0,
            Arm::Two => 1,
        }
    }

    pub const fn number(self) -> u8 {
        match self {
            Arm::One => 1,
            Arm::Two => 2,
        }
    }
}

impl TryFrom<u8> for Arm {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Arm::One),
            2 => Ok(Arm::Two),
            _ => Err(Error::Validation(format!("arm must be 1 or 2, got {v}"))),
        }
    }
}

impl From<Arm> for u8 {
    fn from(a: Arm) -> u8 {
        a.number()
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Record {
    /// Follow-up time in years, > 0.
    pub time: f64,
    /// `true` when the event was observed, `false` when censored.
    pub event: bool,
    pub arm: Arm,
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurvivalDataset {
    records: Vec<Record>,
}

impl SurvivalDataset {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if !(r.time > 0.0 && r.time.is_finite()) {
                return Err(Error::Validation(format!(
                    "record {i}: time must be positive and finite, got {}",
                    r.time
                )));
            }
        }
        Ok(Self { records })
    }

    /// Builds a single-arm dataset (arm 1) from parallel slices.
    pub fn single_arm(times: &[f64], events: &[bool]) -> Result<Self> {
        if times.len() != events.len() {
            return Err(Error::Validation(format!(
                "times/events length mismatch: {} vs {}",
                times.len(),
                events.len()
            )));
        }
        Self::new(
            times
                .iter()
                .zip(events)
                .map(|(&time, &event)| Record {
                    time,
                    event,
                    arm: Arm::One,
                })
                .collect(),
        )
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn count(&self, arm: Arm) -> usize {
        self.records.iter().filter(|r| r.arm == arm).count()
    }

    pub fn events(&self, arm: Arm) -> usize {
        self.records.iter().filter(|r| r.arm == arm && r.event).count()
    }

    /// Records of one arm in a column layout suited to likelihood evaluation.
    /// May be empty.
    pub fn arm(&self, arm: Arm) -> ArmSample {
        let mut sample = ArmSample {
            arm,
            times: Vec::new(),
            ln_times: Vec::new(),
            events: Vec::new(),
        };
        for r in self.records.iter().filter(|r| r.arm == arm) {
            sample.times.push(r.time);
            sample.ln_times.push(math::ln(r.time));
            sample.events.push(r.event);
        }
        sample
    }
}

/// Column view of one arm with cached `ln t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSample {
    pub arm: Arm,
    pub times: Vec<f64>,
    pub ln_times: Vec<f64>,
    pub events: Vec<bool>,
}

impl ArmSample {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_events(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }

    pub fn non_empty(&self) -> Result<&Self> {
        if self.is_empty() {
            Err(Error::EmptyData {
                arm: self.arm.number(),
            })
        } else {
            Ok(self)
        }
    }
}
