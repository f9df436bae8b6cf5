//! Conjunctive row predicates: `attribute op literal` terms joined by AND.
//!
//! The textual form is `col:op:value,col:op:value`. Values may contain `:`
//! (timestamps) but not `,`. Operators accept symbolic (`=`, `!=`, `<`, `<=`,
//! `>`, `>=`, `≠`, `≤`, `≥`) and mnemonic (`eq`, `ne`, `lt`, `le`, `gt`, `ge`)
//! spellings.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dataset::{ordinal, Cell};
use super::value::{parse_date, parse_datetime, parse_numeric, SECONDS_PER_DAY};
use super::{Dataset, Field, ValueKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Comparator {
    fn is_equality(self) -> bool {
        matches!(self, Comparator::Eq | Comparator::Ne)
    }

    fn holds(self, ord: Ordering) -> bool {
        match self {
            Comparator::Eq => ord == Ordering::Equal,
            Comparator::Ne => ord != Ordering::Equal,
            Comparator::Lt => ord == Ordering::Less,
            Comparator::Le => ord != Ordering::Greater,
            Comparator::Gt => ord == Ordering::Greater,
            Comparator::Ge => ord != Ordering::Less,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }
}

impl FromStr for Comparator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "=" | "==" | "eq" => Comparator::Eq,
            "!=" | "≠" | "<>" | "ne" => Comparator::Ne,
            "<" | "lt" => Comparator::Lt,
            "<=" | "≤" | "le" => Comparator::Le,
            ">" | "gt" => Comparator::Gt,
            ">=" | "≥" | "ge" => Comparator::Ge,
            other => return Err(Error::MalformedPredicate(format!("unknown operator {other:?}"))),
        })
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub column: String,
    pub op: Comparator,
    pub value: String,
}

impl Condition {
    pub fn new(column: impl Into<String>, op: Comparator, value: impl Into<String>) -> Self {
        Condition { column: column.into(), op, value: value.into() }
    }
}

/// Conjunction of conditions; the empty predicate accepts every row.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Predicate {
    pub conditions: Vec<Condition>,
}

impl Predicate {
    pub fn all() -> Self {
        Predicate::default()
    }

    pub fn new(conditions: Vec<Condition>) -> Self {
        Predicate { conditions }
    }

    pub fn and(mut self, column: impl Into<String>, op: Comparator, value: impl Into<String>) -> Self {
        self.conditions.push(Condition::new(column, op, value));
        self
    }

    pub fn columns(&self) -> impl Iterator<Item = &str> {
        self.conditions.iter().map(|c| c.column.as_str())
    }

    /// Indices of rows satisfying every condition.
    pub fn matching_rows(&self, ds: &Dataset) -> Result<Vec<usize>> {
        let tests = self
            .conditions
            .iter()
            .map(|c| CompiledCondition::compile(ds, c))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..ds.row_count())
            .filter(|&r| tests.iter().all(|t| t.matches(ds, r)))
            .collect())
    }

    /// Per-row mask; same semantics as [`Predicate::matching_rows`].
    pub fn mask(&self, ds: &Dataset) -> Result<Vec<bool>> {
        let mut mask = vec![false; ds.row_count()];
        for r in self.matching_rows(ds)? {
            mask[r] = true;
        }
        Ok(mask)
    }
}

impl FromStr for Predicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut conditions = Vec::new();
        for term in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let mut parts = term.splitn(3, ':');
            let (Some(col), Some(op), Some(value)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::MalformedPredicate(format!("expected col:op:value, got {term:?}")));
            };
            if col.is_empty() {
                return Err(Error::MalformedPredicate(format!("empty attribute name in {term:?}")));
            }
            conditions.push(Condition::new(col, op.parse()?, value));
        }
        Ok(Predicate { conditions })
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.conditions.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}:{}", c.column, c.op, c.value)?;
        }
        Ok(())
    }
}

impl<'de> Deserialize<'de> for Predicate {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            List(Vec<Condition>),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::List(conditions) => Ok(Predicate { conditions }),
        }
    }
}

enum Literal {
    /// The literal is one of the attribute's missing tokens.
    Missing,
    Ordinal(f64),
    /// DateTime attribute compared against a bare date: compare calendar days.
    Day(i32),
    Text(String),
}

struct CompiledCondition {
    col: usize,
    op: Comparator,
    literal: Literal,
}

impl CompiledCondition {
    fn compile(ds: &Dataset, c: &Condition) -> Result<Self> {
        let col = ds.column_index(&c.column)?;
        let field = &ds.schema().fields()[col];
        let incompatible = || Error::IncompatibleComparison {
            column: c.column.clone(),
            op: c.op.to_string(),
            kind: field.kind,
        };
        let literal = if field.is_missing_token(&c.value) {
            if !c.op.is_equality() {
                return Err(incompatible());
            }
            Literal::Missing
        } else {
            match field.kind {
                ValueKind::Numeric => Literal::Ordinal(parse_numeric(&c.value).ok_or_else(incompatible)?),
                ValueKind::Date => Literal::Ordinal(parse_date(&c.value).ok_or_else(incompatible)? as f64),
                ValueKind::DateTime => match parse_datetime(&c.value) {
                    Some(s) => Literal::Ordinal(s as f64),
                    None => Literal::Day(parse_date(&c.value).ok_or_else(incompatible)?),
                },
                ValueKind::Categorical | ValueKind::Identifier => {
                    if c.op.is_equality() {
                        Literal::Text(c.value.clone())
                    } else {
                        let pos = level_position(field, &c.value).ok_or_else(incompatible)?;
                        Literal::Ordinal(pos as f64)
                    }
                }
            }
        };
        Ok(CompiledCondition { col, op: c.op, literal })
    }

    fn matches(&self, ds: &Dataset, row: usize) -> bool {
        let field = &ds.schema().fields()[self.col];
        let column = &ds.columns()[self.col];
        let cell = column.cell(row);
        match &self.literal {
            Literal::Missing => match self.op {
                Comparator::Eq => cell.is_missing(),
                _ => !cell.is_missing(),
            },
            Literal::Text(t) => match cell {
                // text literals only reach here with = or !=
                Cell::Text(v) => self.op.holds(if v == t { Ordering::Equal } else { Ordering::Less }),
                _ => false,
            },
            Literal::Day(d) => match cell {
                Cell::Instant(s) => self.op.holds((s.div_euclid(SECONDS_PER_DAY) as i32).cmp(d)),
                _ => false,
            },
            Literal::Ordinal(x) => match ordinal(field, column, row) {
                Some(v) => v.partial_cmp(x).is_some_and(|o| self.op.holds(o)),
                None => false,
            },
        }
    }
}

fn level_position(field: &Field, label: &str) -> Option<usize> {
    field.levels.as_ref()?.iter().position(|l| l == label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Column, Schema};

    fn people() -> Dataset {
        let schema = Schema::new(vec![
            Field::new("Age", ValueKind::Numeric),
            Field::new("Outcome", ValueKind::Categorical),
        ])
        .unwrap();
        Dataset::new(
            schema,
            vec![
                Column::numbers(vec![Some(30.0), Some(67.0), None, Some(80.0)]),
                Column::text(vec![Some("H"), Some("D"), Some("D"), None]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn parses_query_string() {
        let p: Predicate = "Outcome:=:D,Age:ge:65".parse().unwrap();
        assert_eq!(p.conditions.len(), 2);
        assert_eq!(p.conditions[1].op, Comparator::Ge);
        assert_eq!(p.to_string(), "Outcome:=:D,Age:>=:65");
        let ts: Predicate = "T:<:2020/03/15 14:22:01".parse().unwrap();
        assert_eq!(ts.conditions[0].value, "2020/03/15 14:22:01");
        assert!("Age>3".parse::<Predicate>().is_err());
        assert!("Age:~:3".parse::<Predicate>().is_err());
    }

    #[test]
    fn equality_and_ordering() {
        let ds = people();
        let rows = |s: &str| s.parse::<Predicate>().unwrap().matching_rows(&ds).unwrap();
        assert_eq!(rows("Outcome:=:D"), [1, 2]);
        assert_eq!(rows("Outcome:!=:D"), [0]);
        assert_eq!(rows("Age:<:0"), Vec::<usize>::new());
        assert_eq!(rows("Age:>=:67,Outcome:=:D"), [1]);
        assert_eq!(rows("Outcome:=:Unknown"), [3]);
        assert_eq!(rows("Age:!=:NA"), [0, 1, 3]);
        assert_eq!(rows(""), [0, 1, 2, 3]);
    }

    #[test]
    fn type_incompatible_comparisons() {
        let ds = people();
        let err = |s: &str| s.parse::<Predicate>().unwrap().matching_rows(&ds).unwrap_err();
        assert!(matches!(err("Outcome:<:D"), Error::IncompatibleComparison { .. }));
        assert!(matches!(err("Age:=:old"), Error::IncompatibleComparison { .. }));
        assert!(matches!(err("Age:<:Unknown"), Error::IncompatibleComparison { .. }));
        assert!(matches!(err("Nope:=:1"), Error::UnknownColumn(_)));
    }

    #[test]
    fn json_accepts_both_forms() {
        let a: Predicate = serde_json::from_str(r#""Outcome:=:D""#).unwrap();
        let b: Predicate = serde_json::from_str(r#"[{"column":"Outcome","op":"=","value":"D"}]"#).unwrap();
        assert_eq!(a, b);
    }
}
