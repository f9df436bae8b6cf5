use std::fmt;

use chrono::{Datelike, NaiveDate, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ValueKind {
    Numeric,
    Categorical,
    Date,
    DateTime,
    Identifier,
}

impl ValueKind {
    /// Kinds with a natural total order usable by `<`-style comparisons
    /// and normalized distances.
    pub fn is_ordered(self) -> bool {
        matches!(self, ValueKind::Numeric | ValueKind::Date | ValueKind::DateTime)
    }

    pub fn is_temporal(self) -> bool {
        matches!(self, ValueKind::Date | ValueKind::DateTime)
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ValueKind::Numeric => "Numeric",
            ValueKind::Categorical => "Categorical",
            ValueKind::Date => "Date",
            ValueKind::DateTime => "DateTime",
            ValueKind::Identifier => "Identifier",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttributeClass {
    DirectIdentifier,
    QuasiIdentifier,
    Sensitive,
    Insensitive,
}

impl fmt::Display for AttributeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AttributeClass::DirectIdentifier => "DirectIdentifier",
            AttributeClass::QuasiIdentifier => "QuasiIdentifier",
            AttributeClass::Sensitive => "Sensitive",
            AttributeClass::Insensitive => "Insensitive",
        };
        f.write_str(s)
    }
}

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch")
}

/// Days since 1970-01-01.
pub fn date_to_days(date: NaiveDate) -> i32 {
    (date - epoch()).num_days() as i32
}

pub fn days_to_date(days: i32) -> NaiveDate {
    epoch() + chrono::Duration::days(days as i64)
}

fn parse_ymd(s: &str) -> Option<NaiveDate> {
    let sep = match s.as_bytes().get(4) {
        Some(b'/') => '/',
        Some(b'-') => '-',
        _ => return None,
    };
    let mut parts = s.split(sep);
    let (y, m, d) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some() || y.len() != 4 || m.is_empty() || m.len() > 2 || d.is_empty() || d.len() > 2 {
        return None;
    }
    if !(y.bytes().chain(m.bytes()).chain(d.bytes())).all(|b| b.is_ascii_digit()) {
        return None;
    }
    NaiveDate::from_ymd_opt(y.parse().ok()?, m.parse().ok()?, d.parse().ok()?)
}

/// Parses `YYYY/MM/DD` or `YYYY-MM-DD` into days since the epoch.
pub fn parse_date(s: &str) -> Option<i32> {
    parse_ymd(s.trim()).map(date_to_days)
}

/// Parses `YYYY/MM/DD HH:MM:SS` (or dashed date, optional `T` separator)
/// into seconds since the epoch.
pub fn parse_datetime(s: &str) -> Option<i64> {
    let s = s.trim();
    let (date, time) = s.split_once([' ', 'T'])?;
    let date = parse_ymd(date)?;
    let time = NaiveTime::parse_from_str(time.trim(), "%H:%M:%S").ok()?;
    Some(date_to_days(date) as i64 * SECONDS_PER_DAY + time.num_seconds_from_midnight() as i64)
}

pub fn parse_numeric(s: &str) -> Option<f64> {
    let v: f64 = s.trim().parse().ok()?;
    // -0.0 and 0.0 are one value for grouping purposes
    v.is_finite().then_some(if v == 0.0 { 0.0 } else { v })
}

pub fn format_date(days: i32) -> String {
    let d = days_to_date(days);
    format!("{:04}/{:02}/{:02}", d.year(), d.month(), d.day())
}

pub fn format_datetime(seconds: i64) -> String {
    let day = seconds.div_euclid(SECONDS_PER_DAY) as i32;
    let secs = seconds.rem_euclid(SECONDS_PER_DAY);
    format!(
        "{} {:02}:{:02}:{:02}",
        format_date(day),
        secs / 3600,
        (secs % 3600) / 60,
        secs % 60
    )
}

pub fn format_numeric(v: f64) -> String {
    format!("{v}")
}
