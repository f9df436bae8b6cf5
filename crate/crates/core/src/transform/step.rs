use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::table::value::{format_date, parse_date};
use crate::table::{AttributeClass, Predicate};

fn default_symbol() -> String {
    "*".to_string()
}

/// Where period buckets start.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DateAnchor {
    /// Earliest non-missing date of the column.
    #[default]
    DatasetMin,
    /// Days since 1970-01-01.
    Day(i32),
}

impl Serialize for DateAnchor {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            DateAnchor::DatasetMin => s.serialize_str("dataset-min"),
            DateAnchor::Day(d) => s.serialize_str(&format_date(*d)),
        }
    }
}

impl<'de> Deserialize<'de> for DateAnchor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "dataset-min" {
            return Ok(DateAnchor::DatasetMin);
        }
        parse_date(&s)
            .map(DateAnchor::Day)
            .ok_or_else(|| serde::de::Error::custom(format!("anchor {s:?} is neither a date nor \"dataset-min\"")))
    }
}

/// One parameterized transformation. Serialized with a `variant` tag, e.g.
/// `{"variant": "BinFixedWidth", "column": "Age", "width": 5, "origin": 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum TransformStep {
    /// Replace cells of `column` in rows matching `predicate` with `symbol`;
    /// they count as missing from then on.
    SuppressCells {
        column: String,
        #[serde(default)]
        predicate: Predicate,
        #[serde(default = "default_symbol")]
        symbol: String,
    },
    /// Keep one row per key: the one with the smallest `order_column` value,
    /// earliest in file order on ties.
    SuppressDuplicateRows { key_columns: Vec<String>, order_column: String },
    RecodeCategories { column: String, mapping: BTreeMap<String, String> },
    TruncateDateTime { column: String },
    GeneralizeDatePeriod {
        column: String,
        period_days: i64,
        #[serde(default)]
        anchor: DateAnchor,
    },
    BinFixedWidth {
        column: String,
        width: f64,
        #[serde(default)]
        origin: f64,
    },
    BinQuantiles { column: String, q: usize },
    BinCustomRanges { column: String, edges: Vec<f64> },
    AddUniformIntegerNoise {
        column: String,
        lo: i64,
        hi: i64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    DropColumns {
        columns: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
    },
    DeriveDuration {
        start: String,
        end: String,
        new_name: String,
        #[serde(default)]
        drop_sources: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class: Option<AttributeClass>,
    },
    Classify { assignments: BTreeMap<String, AttributeClass> },
}

/// How a step relates to the information it starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    /// Adds, removes or relabels attributes.
    Structural,
    /// Removes whole records.
    RowSuppression,
    /// Truthful cell-level generalization or suppression: every output value
    /// contains its input.
    Coarsening,
    /// Distorts values; output need not contain the input.
    Perturbative,
}

impl TransformStep {
    pub fn name(&self) -> &'static str {
        match self {
            TransformStep::SuppressCells { .. } => "SuppressCells",
            TransformStep::SuppressDuplicateRows { .. } => "SuppressDuplicateRows",
            TransformStep::RecodeCategories { .. } => "RecodeCategories",
            TransformStep::TruncateDateTime { .. } => "TruncateDateTime",
            TransformStep::GeneralizeDatePeriod { .. } => "GeneralizeDatePeriod",
            TransformStep::BinFixedWidth { .. } => "BinFixedWidth",
            TransformStep::BinQuantiles { .. } => "BinQuantiles",
            TransformStep::BinCustomRanges { .. } => "BinCustomRanges",
            TransformStep::AddUniformIntegerNoise { .. } => "AddUniformIntegerNoise",
            TransformStep::DropColumns { .. } => "DropColumns",
            TransformStep::DeriveDuration { .. } => "DeriveDuration",
            TransformStep::Classify { .. } => "Classify",
        }
    }

    pub fn kind(&self) -> StepKind {
        match self {
            TransformStep::DropColumns { .. }
            | TransformStep::DeriveDuration { .. }
            | TransformStep::Classify { .. } => StepKind::Structural,
            TransformStep::SuppressDuplicateRows { .. } => StepKind::RowSuppression,
            TransformStep::AddUniformIntegerNoise { .. } => StepKind::Perturbative,
            _ => StepKind::Coarsening,
        }
    }

    pub fn is_perturbative(&self) -> bool {
        self.kind() == StepKind::Perturbative
    }

    /// Attributes whose values the step rewrites or creates.
    pub fn touched_columns(&self) -> Vec<&str> {
        match self {
            TransformStep::SuppressCells { column, .. }
            | TransformStep::RecodeCategories { column, .. }
            | TransformStep::TruncateDateTime { column }
            | TransformStep::GeneralizeDatePeriod { column, .. }
            | TransformStep::BinFixedWidth { column, .. }
            | TransformStep::BinQuantiles { column, .. }
            | TransformStep::BinCustomRanges { column, .. }
            | TransformStep::AddUniformIntegerNoise { column, .. } => vec![column.as_str()],
            TransformStep::DeriveDuration { new_name, .. } => vec![new_name.as_str()],
            TransformStep::SuppressDuplicateRows { .. }
            | TransformStep::DropColumns { .. }
            | TransformStep::Classify { .. } => vec![],
        }
    }

    /// Fills a missing noise seed; other steps are returned unchanged.
    pub fn with_default_seed(&self, seed: u64) -> TransformStep {
        match self {
            TransformStep::AddUniformIntegerNoise { column, lo, hi, seed: None } => {
                TransformStep::AddUniformIntegerNoise { column: column.clone(), lo: *lo, hi: *hi, seed: Some(seed) }
            }
            other => other.clone(),
        }
    }
}

impl fmt::Display for TransformStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformStep::SuppressCells { column, predicate, symbol } => {
                write!(f, "SuppressCells({column} where [{predicate}] -> {symbol:?})")
            }
            TransformStep::SuppressDuplicateRows { key_columns, order_column } => {
                write!(f, "SuppressDuplicateRows(key {}, keep first by {order_column})", key_columns.join("+"))
            }
            TransformStep::RecodeCategories { column, mapping } => {
                let pairs: Vec<String> = mapping.iter().map(|(k, v)| format!("{k}->{v}")).collect();
                write!(f, "RecodeCategories({column}: {})", pairs.join(", "))
            }
            TransformStep::TruncateDateTime { column } => write!(f, "TruncateDateTime({column})"),
            TransformStep::GeneralizeDatePeriod { column, period_days, anchor } => {
                let anchor = match anchor {
                    DateAnchor::DatasetMin => "dataset-min".to_string(),
                    DateAnchor::Day(d) => format_date(*d),
                };
                write!(f, "GeneralizeDatePeriod({column}, {period_days} days from {anchor})")
            }
            TransformStep::BinFixedWidth { column, width, origin } => {
                write!(f, "BinFixedWidth({column}, width {width}, origin {origin})")
            }
            TransformStep::BinQuantiles { column, q } => write!(f, "BinQuantiles({column}, q={q})"),
            TransformStep::BinCustomRanges { column, edges } => {
                let e: Vec<String> = edges.iter().map(|e| e.to_string()).collect();
                write!(f, "BinCustomRanges({column}, edges [{}])", e.join(", "))
            }
            TransformStep::AddUniformIntegerNoise { column, lo, hi, seed } => match seed {
                Some(s) => write!(f, "AddUniformIntegerNoise({column}, [{lo}, {hi}], seed {s})"),
                None => write!(f, "AddUniformIntegerNoise({column}, [{lo}, {hi}])"),
            },
            TransformStep::DropColumns { columns, .. } => write!(f, "DropColumns({})", columns.join(", ")),
            TransformStep::DeriveDuration { start, end, new_name, .. } => {
                write!(f, "DeriveDuration({new_name} = {end} - {start})")
            }
            TransformStep::Classify { assignments } => {
                let pairs: Vec<String> = assignments.iter().map(|(k, v)| format!("{k}:{v}")).collect();
                write!(f, "Classify({})", pairs.join(", "))
            }
        }
    }
}
