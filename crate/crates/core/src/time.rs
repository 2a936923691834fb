//! Time points: quarterly labels (`2007Q3`) or ISO dates (`2007-09-30`).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// An ordered time label. Ordering is chronological; the label is kept
/// verbatim (quarters are normalized to upper-case `Q`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TimePoint {
    label: String,
    key: (i32, u32, u32, u8),
}

impl TimePoint {
    pub fn parse(raw: &str) -> Result<Self, Error> {
        let s = raw.trim();
        let bad = || Error::InvalidTime(raw.to_string());
        if let Some(pos) = s.find(['Q', 'q']) {
            let (year, quarter) = (&s[..pos], &s[pos + 1..]);
            if year.len() != 4 || !year.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let year: i32 = year.parse().map_err(|_| bad())?;
            let q: u32 = quarter.parse().map_err(|_| bad())?;
            if !(1..=4).contains(&q) || quarter.len() != 1 {
                return Err(bad());
            }
            return Ok(TimePoint {
                label: format!("{year:04}Q{q}"),
                key: (year, (q - 1) * 3 + 1, 1, 0),
            });
        }
        let date = NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| bad())?;
        Ok(TimePoint {
            label: date.format("%Y-%m-%d").to_string(),
            key: (date.year(), date.month(), date.day(), 1),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl Ord for TimePoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .cmp(&other.key)
            .then_with(|| self.label.cmp(&other.label))
    }
}

impl PartialOrd for TimePoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl FromStr for TimePoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TimePoint::parse(s)
    }
}

impl TryFrom<String> for TimePoint {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        TimePoint::parse(&s)
    }
}

impl From<TimePoint> for String {
    fn from(t: TimePoint) -> String {
        t.label
    }
}

/// Inclusive time window; open ends are unbounded.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: Option<TimePoint>,
    pub end: Option<TimePoint>,
}

impl TimeWindow {
    pub fn new(start: Option<TimePoint>, end: Option<TimePoint>) -> Result<Self, Error> {
        if let (Some(s), Some(e)) = (&start, &end) {
            if e < s {
                return Err(Error::InvalidConfig(format!(
                    "window end {e} precedes start {s}"
                )));
            }
        }
        Ok(TimeWindow { start, end })
    }

    pub fn contains(&self, t: &TimePoint) -> bool {
        self.start.as_ref().is_none_or(|s| s <= t) && self.end.as_ref().is_none_or(|e| t <= e)
    }
}
