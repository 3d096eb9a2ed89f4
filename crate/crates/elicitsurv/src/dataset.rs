//! Delimited survival datasets with columns `id, time, event, arm`.

use std::path::Path;

use elicitsurv_core::{Arm, Record, SurvivalDataset};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

pub const DAYS_PER_YEAR: f64 = 365.25;
pub const MONTHS_PER_YEAR: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    #[default]
    Years,
    Months,
    Days,
}

impl TimeUnit {
    pub fn to_years(self, t: f64) -> f64 {
        match self {
            TimeUnit::Years => t,
            TimeUnit::Months => t / MONTHS_PER_YEAR,
            TimeUnit::Days => t / DAYS_PER_YEAR,
        }
    }
}

impl std::str::FromStr for TimeUnit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "years" | "year" => Ok(TimeUnit::Years),
            "months" | "month" => Ok(TimeUnit::Months),
            "days" | "day" => Ok(TimeUnit::Days),
            _ => Err(format!("unknown time unit `{s}`; expected years, months or days")),
        }
    }
}

/// Records and per-arm counts of a loaded file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub data: SurvivalDataset,
    pub ids: Vec<String>,
}

impl LoadedDataset {
    /// `(records, events)` per arm.
    pub fn counts(&self) -> [(usize, usize); 2] {
        Arm::BOTH.map(|a| (self.data.count(a), self.data.events(a)))
    }
}

pub fn parse_dataset<R: std::io::Read>(reader: R, unit: TimeUnit) -> std::result::Result<LoadedDataset, String> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| format!("header: {e}"))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| format!("missing column `{name}` (expected id, time, event, arm)"))
    };
    let (c_id, c_time, c_event, c_arm) = (column("id")?, column("time")?, column("event")?, column("arm")?);

    let mut records = Vec::new();
    let mut ids = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        // Line 1 is the header.
        let line = i + 2;
        let row = row.map_err(|e| format!("line {line}: {e}"))?;
        let field = |c: usize, name: &str| row.get(c).ok_or_else(|| format!("line {line}: missing `{name}` field"));
        let id = field(c_id, "id")?.to_string();
        let at = |m: String| format!("line {line} (id {id}): {m}");

        let raw = field(c_time, "time")?;
        let time: f64 = raw.parse().map_err(|_| at(format!("time `{raw}` is not a number")))?;
        let years = unit.to_years(time);
        if !(years > 0.0 && years.is_finite()) {
            return Err(at(format!("time must be > 0, got {raw}")));
        }
        let event = match field(c_event, "event")? {
            "0" => false,
            "1" => true,
            other => return Err(at(format!("event must be 0 or 1, got `{other}`"))),
        };
        let arm = match field(c_arm, "arm")? {
            "1" => Arm::One,
            "2" => Arm::Two,
            other => return Err(at(format!("arm must be 1 or 2, got `{other}`"))),
        };
        records.push(Record {
            time: years,
            event,
            arm,
        });
        ids.push(id);
    }
    let data = SurvivalDataset::new(records).map_err(|e| e.to_string())?;
    Ok(LoadedDataset { data, ids })
}

/// Reads a dataset and converts times to years.
pub fn load_dataset(path: &Path, unit: TimeUnit) -> Result<LoadedDataset> {
    let file = std::fs::File::open(path).map_err(AppError::io(path))?;
    parse_dataset(std::io::BufReader::new(file), unit).map_err(|message| AppError::Input {
        path: path.to_path_buf(),
        message,
    })
}
