//! Calendar dates, fixed-offset day assignment, and `YYYY-MM-DD` text.
//!
//! Trips and metric series are keyed by calendar day in a configured fixed
//! UTC offset, so a full timezone database is unnecessary.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DateError {
    #[error("invalid date string {0:?}, expected YYYY-MM-DD")]
    Malformed(String),
    #[error("calendar field out of range in {0:?}")]
    OutOfRange(String),
}

/// A calendar day, stored as days since 1970-01-01.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Date(i64);

impl Date {
    pub fn from_days(days: i64) -> Self {
        Date(days)
    }

    pub fn days(self) -> i64 {
        self.0
    }

    pub fn from_ymd(year: i64, month: u32, day: u32) -> Option<Self> {
        if !(1..=12).contains(&month) || day < 1 || day > days_in_month(year, month) {
            return None;
        }
        Some(Date(days_from_civil(year, month, day)))
    }

    pub fn ymd(self) -> (i64, u32, u32) {
        civil_from_days(self.0)
    }

    /// Calendar day containing a unix timestamp, shifted by a fixed UTC
    /// offset in seconds (positive east).
    pub fn from_unix(t: i64, tz_offset_s: i64) -> Self {
        Date((t + tz_offset_s).div_euclid(SECONDS_PER_DAY))
    }

    /// Unix timestamp of this day's 00:00 in the given fixed offset.
    pub fn start_unix(self, tz_offset_s: i64) -> i64 {
        self.0 * SECONDS_PER_DAY - tz_offset_s
    }

    pub fn succ(self) -> Self {
        Date(self.0 + 1)
    }

    /// Inclusive range of days.
    pub fn range_inclusive(start: Date, end: Date) -> impl Iterator<Item = Date> {
        (start.0..=end.0).map(Date)
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (y, m, d) = self.ymd();
        write!(f, "{y:04}-{m:02}-{d:02}")
    }
}

impl FromStr for Date {
    type Err = DateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.splitn(3, '-');
        let (y, m, d) = match (parts.next(), parts.next(), parts.next()) {
            (Some(y), Some(m), Some(d)) => (y, m, d),
            _ => return Err(DateError::Malformed(s.to_string())),
        };
        if y.len() != 4 || m.len() != 2 || d.len() != 2 {
            return Err(DateError::Malformed(s.to_string()));
        }
        let year: i64 = y.parse().map_err(|_| DateError::Malformed(s.to_string()))?;
        let month: u32 = m.parse().map_err(|_| DateError::Malformed(s.to_string()))?;
        let day: u32 = d.parse().map_err(|_| DateError::Malformed(s.to_string()))?;
        Date::from_ymd(year, month, day).ok_or_else(|| DateError::OutOfRange(s.to_string()))
    }
}

fn is_leap(year: i64) -> bool {
    year % 4 == 0 && (year % 100 != 0 || year % 400 == 0)
}

fn days_in_month(year: i64, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 => {
            if is_leap(year) {
                29
            } else {
                28
            }
        }
        _ => 0,
    }
}

// Civil-date conversions after Howard Hinnant's date algorithms.
fn days_from_civil(y: i64, m: u32, d: u32) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let mp = i64::from((m + 9) % 12);
    let doy = (153 * mp + 2) / 5 + i64::from(d) - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (if m <= 2 { y + 1 } else { y }, m, d)
}
