//! Small domain types shared across modules.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Opaque security identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StockId(pub String);

impl StockId {
    pub fn new(id: impl Into<String>) -> Self {
        StockId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StockId {
    fn from(s: &str) -> Self {
        StockId(s.to_string())
    }
}

/// Calendar quarter (Jan-Mar is quarter 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quarter {
    pub year: i32,
    pub index: u8,
}

impl Quarter {
    pub fn new(year: i32, index: u8) -> Self {
        assert!((1..=4).contains(&index), "quarter index must be 1..=4");
        Quarter { year, index }
    }

    pub fn of(date: NaiveDate) -> Self {
        Quarter {
            year: date.year(),
            index: ((date.month0() / 3) + 1) as u8,
        }
    }

    pub fn prev(self) -> Self {
        if self.index == 1 {
            Quarter::new(self.year - 1, 4)
        } else {
            Quarter::new(self.year, self.index - 1)
        }
    }

    pub fn next(self) -> Self {
        if self.index == 4 {
            Quarter::new(self.year + 1, 1)
        } else {
            Quarter::new(self.year, self.index + 1)
        }
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, (self.index as u32 - 1) * 3 + 1, 1).expect("valid quarter")
    }

    pub fn last_day(self) -> NaiveDate {
        self.next().first_day().pred_opt().expect("valid date")
    }

    /// Sequential number, used for time-trend regressors and gaps.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 4 + (self.index as i64 - 1)
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.index)
    }
}

impl FromStr for Quarter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::Config(format!("cannot parse quarter `{s}` (expected e.g. 2008Q3)"));
        let (y, q) = s.trim().split_once(['Q', 'q']).ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        let index: u8 = q.parse().map_err(|_| bad())?;
        if !(1..=4).contains(&index) {
            return Err(bad());
        }
        Ok(Quarter { year, index })
    }
}

impl Serialize for Quarter {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Quarter {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Investor category carried in ownership files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OwnershipCategory {
    Institution,
    #[serde(alias = "foreign")]
    ForeignInstitution,
    #[serde(alias = "local")]
    LocalInstitution,
}

impl OwnershipCategory {
    pub const ALL: [OwnershipCategory; 3] = [
        OwnershipCategory::Institution,
        OwnershipCategory::ForeignInstitution,
        OwnershipCategory::LocalInstitution,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OwnershipCategory::Institution => "institution",
            OwnershipCategory::ForeignInstitution => "foreign_institution",
            OwnershipCategory::LocalInstitution => "local_institution",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            OwnershipCategory::Institution => "Institutions",
            OwnershipCategory::ForeignInstitution => "Foreign Institutions",
            OwnershipCategory::LocalInstitution => "Local Institutions",
        }
    }
}

impl FromStr for OwnershipCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "institution" | "inst" => Ok(OwnershipCategory::Institution),
            "foreign_institution" | "foreign" => Ok(OwnershipCategory::ForeignInstitution),
            "local_institution" | "local" => Ok(OwnershipCategory::LocalInstitution),
            other => Err(Error::Config(format!("unknown ownership category `{other}`"))),
        }
    }
}

impl fmt::Display for OwnershipCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Size tercile assigned from the previous quarter-end market capitalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeGroup {
    Small,
    Mid,
    Large,
}

impl SizeGroup {
    pub const ALL: [SizeGroup; 3] = [SizeGroup::Small, SizeGroup::Mid, SizeGroup::Large];

    /// Maps a tercile bucket (1 = lowest) to a group.
    pub fn from_tercile(bucket: usize) -> Self {
        match bucket {
            1 => SizeGroup::Small,
            2 => SizeGroup::Mid,
            3 => SizeGroup::Large,
            _ => panic!("tercile bucket out of range: {bucket}"),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SizeGroup::Small => "Small",
            SizeGroup::Mid => "Mid",
            SizeGroup::Large => "Large",
        }
    }
}

impl fmt::Display for SizeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A t-statistic, or the marker for a zero-variance denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TStat {
    Value(f64),
    /// The standard error is zero to working precision; the estimate is exact.
    ZeroVariance,
}

impl TStat {
    pub fn from_ratio(estimate: f64, se: f64, scale: f64) -> Self {
        if se.is_nan() || se <= 64.0 * f64::EPSILON * scale.abs().max(f64::MIN_POSITIVE) {
            TStat::ZeroVariance
        } else {
            TStat::Value(estimate / se)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            TStat::Value(v) => Some(v),
            TStat::ZeroVariance => None,
        }
    }
}

impl fmt::Display for TStat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TStat::Value(v) => write!(f, "{v}"),
            TStat::ZeroVariance => f.write_str("zero_var"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_of_date_and_navigation() {
        let d = NaiveDate::from_ymd_opt(2008, 5, 17).unwrap();
        let q = Quarter::of(d);
        assert_eq!(q, Quarter::new(2008, 2));
        assert_eq!(q.prev(), Quarter::new(2008, 1));
        assert_eq!(Quarter::new(2008, 1).prev(), Quarter::new(2007, 4));
        assert_eq!(Quarter::new(2007, 4).next(), Quarter::new(2008, 1));
        assert_eq!(q.first_day(), NaiveDate::from_ymd_opt(2008, 4, 1).unwrap());
        assert_eq!(q.last_day(), NaiveDate::from_ymd_opt(2008, 6, 30).unwrap());
        assert_eq!("2008Q2".parse::<Quarter>().unwrap(), q);
        assert!("2008Q5".parse::<Quarter>().is_err());
        assert_eq!(q.to_string(), "2008Q2");
    }

    #[test]
    fn tstat_flags_zero_variance() {
        assert_eq!(TStat::from_ratio(0.5, 0.0, 0.5), TStat::ZeroVariance);
        assert_eq!(TStat::from_ratio(0.5, 1e-20, 0.5), TStat::ZeroVariance);
        assert_eq!(TStat::from_ratio(0.5, 0.25, 0.5), TStat::Value(2.0));
    }
}
