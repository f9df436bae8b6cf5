use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::value::{format_date, format_datetime};
use crate::table::{Cell, Dataset, ValueKind};

pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub label: String,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Distribution of one column: equal-width bins for numbers and dates,
/// value counts for everything else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Profile {
    Histogram { bins: Vec<Bin>, missing: usize },
    Frequencies { counts: Vec<(String, usize)>, missing: usize },
}

impl Profile {
    pub fn missing(&self) -> usize {
        match self {
            Profile::Histogram { missing, .. } | Profile::Frequencies { missing, .. } => *missing,
        }
    }

    pub fn total(&self) -> usize {
        self.missing()
            + match self {
                Profile::Histogram { bins, .. } => bins.iter().map(|b| b.count).sum::<usize>(),
                Profile::Frequencies { counts, .. } => counts.iter().map(|(_, c)| c).sum(),
            }
    }
}

fn edge_label(kind: ValueKind, v: f64) -> String {
    match kind {
        ValueKind::Date => format_date(v.floor() as i32),
        ValueKind::DateTime => format_datetime(v.floor() as i64),
        _ => format!("{}", (v * 1e6).round() / 1e6),
    }
}

/// Histogram of a numeric, date or datetime column. Bins are equal-width
/// over the observed range, left-closed with the last bin closed; integer
/// ranges narrower than `bins` get one bin per value.
pub fn histogram(ds: &Dataset, column: &str, bins: usize) -> Result<Profile> {
    if bins == 0 {
        return Err(Error::InvalidParameter("bins must be positive".into()));
    }
    let (field, col) = ds.column(column)?;
    let values: Vec<f64> = (0..col.len())
        .filter_map(|r| match col.cell(r) {
            Cell::Number(v) => Some(v),
            Cell::Day(d) => Some(d as f64),
            Cell::Instant(s) => Some(s as f64),
            _ => None,
        })
        .collect();
    if !matches!(field.kind, ValueKind::Numeric | ValueKind::Date | ValueKind::DateTime) {
        return Err(crate::error::Error::kind_mismatch(column, "Numeric, Date or DateTime", field.kind));
    }
    let missing = col.len() - values.len();
    if values.is_empty() {
        return Ok(Profile::Histogram { bins: vec![], missing });
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let integral = values.iter().all(|v| v.fract() == 0.0);
    let (count, width) = if integral && max - min + 1.0 <= bins as f64 {
        ((max - min) as usize + 1, 1.0)
    } else if max == min {
        (1, 1.0)
    } else {
        (bins, (max - min) / bins as f64)
    };
    let mut out: Vec<Bin> = (0..count)
        .map(|i| {
            let lo = min + i as f64 * width;
            let hi = if i + 1 == count { max.max(lo) } else { min + (i + 1) as f64 * width };
            let label = if width == 1.0 && integral {
                edge_label(field.kind, lo)
            } else {
                let close = if i + 1 == count { "]" } else { ")" };
                format!("[{}, {}{close}", edge_label(field.kind, lo), edge_label(field.kind, hi))
            };
            Bin { label, lo, hi, count: 0 }
        })
        .collect();
    for v in values {
        let i = (((v - min) / width).floor() as usize).min(count - 1);
        out[i].count += 1;
    }
    Ok(Profile::Histogram { bins: out, missing })
}

/// Value counts in first-appearance order for unordered categories, level
/// order for ordered ones.
pub fn frequencies(ds: &Dataset, column: &str) -> Result<Profile> {
    let (field, col) = ds.column(column)?;
    let missing = col.missing_count();
    let mut counts: Vec<(String, usize)> =
        ds.value_counts(column)?.into_iter().filter(|(v, _)| !field.is_missing_token(v)).collect();
    if let Some(levels) = &field.levels {
        counts.sort_by_key(|(v, _)| levels.iter().position(|l| l == v).unwrap_or(usize::MAX));
    }
    Ok(Profile::Frequencies { counts, missing })
}

pub fn profile(ds: &Dataset, column: &str, bins: usize) -> Result<Profile> {
    match ds.schema().field(column)?.kind {
        ValueKind::Numeric | ValueKind::Date | ValueKind::DateTime => histogram(ds, column, bins),
        ValueKind::Categorical | ValueKind::Identifier => frequencies(ds, column),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityDiagnostic {
    pub column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub before: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub after: Option<Profile>,
}

/// Before/after profiles of the columns a step touched.
pub fn compare(before: &Dataset, after: &Dataset, columns: &[&str]) -> Vec<UtilityDiagnostic> {
    columns
        .iter()
        .map(|c| UtilityDiagnostic {
            column: c.to_string(),
            before: profile(before, c, DEFAULT_BINS).ok(),
            after: profile(after, c, DEFAULT_BINS).ok(),
        })
        .collect()
}
