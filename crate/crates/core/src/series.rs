//! Monthly time stamps, single-variable series and the pixel grid.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("month {0} is outside 1..=12")]
    InvalidMonth(i64),
    #[error("cannot parse time stamp '{0}' (expected YYYY-MM)")]
    BadStamp(String),
    #[error("series is empty")]
    Empty,
    #[error("{stamps} stamps but {values} values")]
    LengthMismatch { stamps: usize, values: usize },
    #[error("stamps not consecutive: {prev} is followed by {next}")]
    Gap { prev: TimeStamp, next: TimeStamp },
    #[error("non-finite value at {0}")]
    NonFinite(TimeStamp),
    #[error("pixel '{pixel}': {reason}")]
    Grid { pixel: String, reason: String },
}

/// A calendar month. Orders by year first, then month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TimeStamp {
    year: i32,
    month: u8,
}

impl TimeStamp {
    pub fn new(year: i32, month: u32) -> Result<Self, SeriesError> {
        if !(1..=12).contains(&month) {
            return Err(SeriesError::InvalidMonth(month as i64));
        }
        Ok(Self {
            year,
            month: month as u8,
        })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    /// Month number, 1 = January.
    pub fn month(&self) -> u32 {
        self.month as u32
    }

    /// Months since year 0, January.
    fn ordinal(&self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    fn from_ordinal(ord: i64) -> Self {
        Self {
            year: ord.div_euclid(12) as i32,
            month: (ord.rem_euclid(12) + 1) as u8,
        }
    }

    pub fn add_months(&self, n: i64) -> Self {
        Self::from_ordinal(self.ordinal() + n)
    }

    pub fn next(&self) -> Self {
        self.add_months(1)
    }

    /// Signed number of months from `self` to `other`.
    pub fn months_until(&self, other: &TimeStamp) -> i64 {
        other.ordinal() - self.ordinal()
    }
}

impl fmt::Display for TimeStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for TimeStamp {
    type Err = SeriesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SeriesError::BadStamp(s.to_string());
        let (y, m) = s.trim().rsplit_once('-').ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        TimeStamp::new(year, month)
    }
}

impl TryFrom<String> for TimeStamp {
    type Error = SeriesError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<TimeStamp> for String {
    fn from(t: TimeStamp) -> String {
        t.to_string()
    }
}

/// `count` consecutive stamps beginning at `start`.
pub fn stamp_range(start: TimeStamp, count: usize) -> Vec<TimeStamp> {
    (0..count as i64).map(|k| start.add_months(k)).collect()
}

/// One variable's gap-free monthly record for one location.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyTimeSeries {
    variable_id: String,
    stamps: Vec<TimeStamp>,
    values: Vec<f64>,
}

impl MonthlyTimeSeries {
    pub fn new(
        variable_id: impl Into<String>,
        stamps: Vec<TimeStamp>,
        values: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        if stamps.len() != values.len() {
            return Err(SeriesError::LengthMismatch {
                stamps: stamps.len(),
                values: values.len(),
            });
        }
        if stamps.is_empty() {
            return Err(SeriesError::Empty);
        }
        for w in stamps.windows(2) {
            if w[0].months_until(&w[1]) != 1 {
                return Err(SeriesError::Gap {
                    prev: w[0],
                    next: w[1],
                });
            }
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(SeriesError::NonFinite(stamps[k]));
        }
        Ok(Self {
            variable_id: variable_id.into(),
            stamps,
            values,
        })
    }

    /// Series of consecutive months starting at `start`.
    pub fn from_start(
        variable_id: impl Into<String>,
        start: TimeStamp,
        values: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        let stamps = stamp_range(start, values.len());
        Self::new(variable_id, stamps, values)
    }

    pub fn variable_id(&self) -> &str {
        &self.variable_id
    }

    pub fn stamps(&self) -> &[TimeStamp] {
        &self.stamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same stamps, new values. Values must be finite and of equal length.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, SeriesError> {
        Self::new(self.variable_id.clone(), self.stamps.clone(), values)
    }
}

/// Zero-based positions within a series that fall in one calendar month.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonthIndexSet {
    pub month: u32,
    pub indices: Vec<usize>,
}

/// Splits a series' positions by calendar month; element `m - 1` holds month `m`.
pub fn month_partition(series: &MonthlyTimeSeries) -> [MonthIndexSet; 12] {
    partition_stamps(series.stamps())
}

pub fn partition_stamps(stamps: &[TimeStamp]) -> [MonthIndexSet; 12] {
    let mut sets: [MonthIndexSet; 12] = std::array::from_fn(|m| MonthIndexSet {
        month: m as u32 + 1,
        indices: Vec::new(),
    });
    for (k, s) in stamps.iter().enumerate() {
        sets[s.month() as usize - 1].indices.push(k);
    }
    sets
}

/// A grid cell with its per-variable series.
#[derive(Debug, Clone, PartialEq)]
pub struct Pixel {
    pub id: String,
    pub lon: f64,
    pub lat: f64,
    pub series: BTreeMap<String, MonthlyTimeSeries>,
}

/// A set of pixels that share one time axis and one variable set.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid {
    variables: Vec<String>,
    stamps: Vec<TimeStamp>,
    pixels: Vec<Pixel>,
}

impl PixelGrid {
    pub fn new(variables: Vec<String>, pixels: Vec<Pixel>) -> Result<Self, SeriesError> {
        let stamps = pixels
            .first()
            .and_then(|p| p.series.values().next())
            .map(|s| s.stamps().to_vec())
            .unwrap_or_default();
        for p in &pixels {
            let grid_err = |reason: String| SeriesError::Grid {
                pixel: p.id.clone(),
                reason,
            };
            if p.series.len() != variables.len()
                || !variables.iter().all(|v| p.series.contains_key(v))
            {
                return Err(grid_err(format!(
                    "variable set {:?} differs from {:?}",
                    p.series.keys().collect::<Vec<_>>(),
                    variables
                )));
            }
            for (name, s) in &p.series {
                if s.stamps() != stamps.as_slice() {
                    return Err(grid_err(format!("'{name}' is not aligned with the grid time axis")));
                }
            }
        }
        Ok(Self {
            variables,
            stamps,
            pixels,
        })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn stamps(&self) -> &[TimeStamp] {
        &self.stamps
    }

    pub fn pixels(&self) -> &[Pixel] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<Pixel> {
        self.pixels
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn jan(year: i32) -> TimeStamp {
        TimeStamp::new(year, 1).unwrap()
    }

    #[test]
    fn two_full_years_give_two_per_month() {
        let s = MonthlyTimeSeries::from_start("x", jan(2000), vec![0.0; 24]).unwrap();
        assert!(month_partition(&s).iter().all(|m| m.indices.len() == 2));
    }

    #[test]
    fn thirteen_months_from_january() {
        let s = MonthlyTimeSeries::from_start("x", jan(2000), vec![0.0; 13]).unwrap();
        let parts = month_partition(&s);
        assert_eq!(parts[0].indices, vec![0, 12]);
        assert!(parts[1..].iter().all(|m| m.indices.len() == 1));
    }

    #[test]
    fn single_july_point() {
        let s = MonthlyTimeSeries::from_start("x", TimeStamp::new(1990, 7).unwrap(), vec![1.0])
            .unwrap();
        let parts = month_partition(&s);
        for p in &parts {
            if p.month == 7 {
                assert_eq!(p.indices, vec![0]);
            } else {
                assert!(p.indices.is_empty());
            }
        }
    }

    #[test]
    fn rejects_gaps_and_non_finite() {
        let stamps = vec![jan(2000), TimeStamp::new(2000, 3).unwrap()];
        assert!(matches!(
            MonthlyTimeSeries::new("x", stamps, vec![1.0, 2.0]),
            Err(SeriesError::Gap { .. })
        ));
        assert!(matches!(
            MonthlyTimeSeries::from_start("x", jan(2000), vec![1.0, f64::NAN]),
            Err(SeriesError::NonFinite(_))
        ));
        assert!(TimeStamp::new(2000, 13).is_err());
        assert!(TimeStamp::new(2000, 0).is_err());
    }

    #[test]
    fn stamp_parse_and_display() {
        let t: TimeStamp = "1976-07".parse().unwrap();
        assert_eq!(t, TimeStamp::new(1976, 7).unwrap());
        assert_eq!(t.to_string(), "1976-07");
        assert!("1976/07".parse::<TimeStamp>().is_err());
        assert_eq!(TimeStamp::new(1999, 12).unwrap().next(), jan(2000));
    }

    proptest! {
        #[test]
        fn partition_covers_positions(year in 1900i32..2100, month in 1u32..=12, len in 1usize..100) {
            let start = TimeStamp::new(year, month).unwrap();
            let s = MonthlyTimeSeries::from_start("x", start, vec![0.0; len]).unwrap();
            let mut all: Vec<usize> = month_partition(&s).iter().flat_map(|m| m.indices.clone()).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..len).collect::<Vec<_>>());
        }

        #[test]
        fn twelve_months_is_one_year(year in -3000i32..3000, month in 1u32..=12, k in -50i64..50) {
            let t = TimeStamp::new(year, month).unwrap().add_months(12 * k);
            prop_assert_eq!(t.month(), month);
            prop_assert_eq!(t.year() as i64, year as i64 + k);
        }

        #[test]
        fn ordering_is_lexicographic(y1 in 1900i32..2100, m1 in 1u32..=12, y2 in 1900i32..2100, m2 in 1u32..=12) {
            let a = TimeStamp::new(y1, m1).unwrap();
            let b = TimeStamp::new(y2, m2).unwrap();
            prop_assert_eq!(a < b, y1 < y2 || (y1 == y2 && m1 < m2));
        }
    }
}
