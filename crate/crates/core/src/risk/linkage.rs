//! Distance-based record linkage between an attacker's view of the data and
//! the protected release.
//!
//! Every protected record is compared with every attacker record over the
//! scenario attributes. Per-attribute distances lie in [0, 1] and are
//! averaged; a missing cell on either side contributes 1. A protected record
//! is matched when exactly one attacker record attains the minimum distance;
//! ties are ambiguous and never count as matches. Row `i` of both datasets
//! describes the same individual, which is what decides correctness.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::keys::encode_shared;
use super::Scenario;
use crate::error::{Error, Result};
use crate::table::{ordinal, Dataset, Field};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnRule {
    /// 0 when equal, 1 otherwise.
    ExactMatch,
    /// |a - b| divided by the attribute's range over both datasets.
    NormalizedAbsolute,
}

/// Per-attribute distance rules. Attributes without an override use
/// ExactMatch for Categorical/Identifier and NormalizedAbsolute for
/// Numeric/Date/DateTime.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistanceSpec {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, ColumnRule>,
}

impl DistanceSpec {
    pub fn with_rule(mut self, column: impl Into<String>, rule: ColumnRule) -> Self {
        self.overrides.insert(column.into(), rule);
        self
    }

    pub fn rule_for(&self, field: &Field) -> ColumnRule {
        self.overrides.get(&field.name).copied().unwrap_or(if field.kind.is_ordered() {
            ColumnRule::NormalizedAbsolute
        } else {
            ColumnRule::ExactMatch
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchKind {
    CorrectUnique,
    FalseUnique,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkageResult {
    pub scenario: Scenario,
    pub record_count: usize,
    pub correct_count: usize,
    pub false_count: usize,
    pub ambiguous_count: usize,
    /// correct + false.
    pub total_match_percent: f64,
    pub correct_match_percent: f64,
    pub false_match_percent: f64,
    pub ambiguous_percent: f64,
    /// False matches as a fraction of all matches; absent without matches.
    pub margin_of_error: Option<f64>,
    /// Per protected record, in row order. Left empty in summaries.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assignments: Vec<MatchKind>,
}

impl LinkageResult {
    /// Headline re-identification risk: the share of protected records that
    /// link to a single attacker record.
    pub fn risk_percent(&self) -> f64 {
        self.total_match_percent
    }

    pub fn summary(&self) -> LinkageResult {
        LinkageResult { assignments: Vec::new(), ..self.clone() }
    }

    pub(crate) fn from_assignments(scenario: Scenario, assignments: Vec<MatchKind>) -> LinkageResult {
        let n = assignments.len();
        let count = |k: MatchKind| assignments.iter().filter(|&&a| a == k).count();
        let (correct, wrong, ambiguous) =
            (count(MatchKind::CorrectUnique), count(MatchKind::FalseUnique), count(MatchKind::Ambiguous));
        let pct = |c: usize| 100.0 * c as f64 / n as f64;
        let correct_match_percent = pct(correct);
        let false_match_percent = pct(wrong);
        LinkageResult {
            scenario,
            record_count: n,
            correct_count: correct,
            false_count: wrong,
            ambiguous_count: ambiguous,
            total_match_percent: correct_match_percent + false_match_percent,
            correct_match_percent,
            false_match_percent,
            ambiguous_percent: pct(ambiguous),
            margin_of_error: (correct + wrong > 0).then(|| wrong as f64 / (correct + wrong) as f64),
            assignments,
        }
    }
}

enum Prepared {
    Exact { attacker: Vec<u32>, protected: Vec<u32> },
    Scaled { attacker: Vec<Option<f64>>, protected: Vec<Option<f64>>, range: f64 },
}

impl Prepared {
    #[inline]
    fn distance(&self, a: usize, b: usize) -> f64 {
        match self {
            Prepared::Exact { attacker, protected } => {
                let (x, y) = (attacker[a], protected[b]);
                if x == 0 || y == 0 || x != y {
                    1.0
                } else {
                    0.0
                }
            }
            Prepared::Scaled { attacker, protected, range } => match (attacker[a], protected[b]) {
                (Some(x), Some(y)) => {
                    if *range > 0.0 {
                        (x - y).abs() / range
                    } else {
                        0.0
                    }
                }
                _ => 1.0,
            },
        }
    }
}

fn prepare(attacker: &Dataset, protected: &Dataset, name: &str, spec: &DistanceSpec) -> Result<Prepared> {
    let (fa, ca) = attacker.column(name)?;
    let (fp, cp) = protected.column(name)?;
    if fa.kind != fp.kind {
        return Err(Error::SchemaMismatch(format!(
            "attribute {name:?} is {} in the attacker view but {} in the protected data",
            fa.kind, fp.kind
        )));
    }
    match spec.rule_for(fp) {
        ColumnRule::ExactMatch => {
            let mut codes = encode_shared(&[(fa, ca), (fp, cp)]);
            let protected = codes.pop().expect("two parts");
            let attacker = codes.pop().expect("two parts");
            Ok(Prepared::Exact { attacker, protected })
        }
        ColumnRule::NormalizedAbsolute => {
            if !fp.kind.is_ordered() {
                return Err(Error::kind_mismatch(name, "an ordered kind for NormalizedAbsolute", fp.kind));
            }
            let a: Vec<Option<f64>> = (0..ca.len()).map(|r| ordinal(fa, ca, r)).collect();
            let p: Vec<Option<f64>> = (0..cp.len()).map(|r| ordinal(fp, cp, r)).collect();
            let (lo, hi) = a.iter().chain(&p).flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
            let range = if hi >= lo { hi - lo } else { 0.0 };
            Ok(Prepared::Scaled { attacker: a, protected: p, range })
        }
    }
}

pub fn record_linkage(
    attacker_view: &Dataset,
    protected: &Dataset,
    scenario: &Scenario,
    spec: &DistanceSpec,
) -> Result<LinkageResult> {
    scenario.validate(protected.schema())?;
    scenario.validate(attacker_view.schema())?;
    if attacker_view.row_count() != protected.row_count() {
        return Err(Error::RowCountMismatch { left: attacker_view.row_count(), right: protected.row_count() });
    }
    if protected.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let prepared = scenario
        .qis()
        .iter()
        .map(|q| prepare(attacker_view, protected, q, spec))
        .collect::<Result<Vec<_>>>()?;
    let n = protected.row_count();
    let width = prepared.len() as f64;

    let assignments: Vec<MatchKind> = (0..n)
        .into_par_iter()
        .map(|b| {
            let mut best = f64::INFINITY;
            let mut best_row = 0;
            let mut ties = 0usize;
            for a in 0..n {
                let d = prepared.iter().map(|p| p.distance(a, b)).sum::<f64>() / width;
                if d < best {
                    best = d;
                    best_row = a;
                    ties = 1;
                } else if d == best {
                    ties += 1;
                }
            }
            match (ties, best_row == b) {
                (1, true) => MatchKind::CorrectUnique,
                (1, false) => MatchKind::FalseUnique,
                _ => MatchKind::Ambiguous,
            }
        })
        .collect();
    Ok(LinkageResult::from_assignments(scenario.clone(), assignments))
}

/// Aggregate distance between one attacker row and one protected row.
pub fn record_distance(
    attacker_view: &Dataset,
    protected: &Dataset,
    scenario: &Scenario,
    spec: &DistanceSpec,
    attacker_row: usize,
    protected_row: usize,
) -> Result<f64> {
    let prepared = scenario
        .qis()
        .iter()
        .map(|q| prepare(attacker_view, protected, q, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(prepared.iter().map(|p| p.distance(attacker_row, protected_row)).sum::<f64>() / prepared.len() as f64)
}
