//! Execution of [`TransformStep`]s.
//!
//! Applying a step happens in two phases. [`resolve`] computes everything
//! that depends on the data (matching rows, quantile cut points, the anchor
//! of date periods); [`execute`] applies the step given that resolution.
//! Running `execute` with one resolution on two aligned datasets applies the
//! same published scheme to both, which is how the attacker view is kept in
//! step with the protected data.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TransformStep;
use super::step::DateAnchor;
use crate::error::{Error, Result};
use crate::risk::keys_for_rows;
use crate::table::value::{format_date, format_numeric};
use crate::table::{ordinal, Cell, Column, ColumnData, Dataset, Field, ValueKind};

/// Data-dependent parameters fixed by [`resolve`].
#[derive(Debug, Clone, PartialEq)]
pub enum Resolution {
    None,
    /// Rows whose cells are suppressed, or rows kept by row suppression.
    Rows(Vec<usize>),
    /// First day of bucket 0 for period generalization.
    Anchor(i32),
    /// Interior quantile cut points and one label per bin.
    Cuts { cuts: Vec<f64>, labels: Vec<String> },
}

impl Resolution {
    /// Short human-readable description for provenance notes.
    pub fn note(&self) -> Option<String> {
        match self {
            Resolution::None | Resolution::Rows(_) => None,
            Resolution::Anchor(d) => Some(format!("anchor {}", format_date(*d))),
            Resolution::Cuts { cuts, .. } => {
                let c: Vec<String> = cuts.iter().map(|c| format_numeric(*c)).collect();
                Some(format!("cut points {}", c.join(", ")))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Executed {
    pub dataset: Dataset,
    pub affected_rows: usize,
    pub affected_cells: usize,
}

fn require_kind(field: &Field, expected: &[ValueKind], label: &str) -> Result<()> {
    if expected.contains(&field.kind) {
        Ok(())
    } else {
        Err(Error::kind_mismatch(&field.name, label, field.kind))
    }
}

fn present_numbers(ds: &Dataset, column: &str) -> Result<Vec<f64>> {
    let (field, col) = ds.column(column)?;
    require_kind(field, &[ValueKind::Numeric], "Numeric")?;
    let ColumnData::Number(v) = col.data() else { unreachable!("numeric storage") };
    Ok(v.iter().flatten().copied().collect())
}

/// Nearest-rank quantile: the smallest value with at least `p` of the mass at
/// or below it.
fn nearest_rank(sorted: &[f64], num: usize, den: usize) -> f64 {
    let m = sorted.len();
    let rank = (num * m).div_ceil(den).max(1);
    sorted[rank - 1]
}

pub fn resolve(ds: &Dataset, step: &TransformStep) -> Result<Resolution> {
    Ok(match step {
        TransformStep::SuppressCells { column, predicate, .. } => {
            ds.column_index(column)?;
            Resolution::Rows(predicate.matching_rows(ds)?)
        }
        TransformStep::SuppressDuplicateRows { key_columns, order_column } => {
            let (of, oc) = ds.column(order_column)?;
            if !of.is_ordered() {
                return Err(Error::kind_mismatch(order_column, "an ordered kind", of.kind));
            }
            let keys = keys_for_rows(ds, key_columns)?;
            let mut best: HashMap<&[u32], (usize, Option<f64>)> = HashMap::new();
            for (r, key) in keys.iter().enumerate() {
                let v = ordinal(of, oc, r);
                best.entry(key.as_slice())
                    .and_modify(|(row, cur)| {
                        // missing order values lose to any present one
                        let better = match (v, *cur) {
                            (Some(a), Some(b)) => a < b,
                            (Some(_), None) => true,
                            _ => false,
                        };
                        if better {
                            *row = r;
                            *cur = v;
                        }
                    })
                    .or_insert((r, v));
            }
            let mut kept: Vec<usize> = best.values().map(|(r, _)| *r).collect();
            kept.sort_unstable();
            Resolution::Rows(kept)
        }
        TransformStep::GeneralizeDatePeriod { column, period_days, anchor } => {
            if *period_days < 1 {
                return Err(Error::InvalidParameter(format!("period_days must be at least 1, got {period_days}")));
            }
            let (field, col) = ds.column(column)?;
            require_kind(field, &[ValueKind::Date], "Date")?;
            match anchor {
                DateAnchor::Day(d) => Resolution::Anchor(*d),
                DateAnchor::DatasetMin => {
                    let ColumnData::Day(v) = col.data() else { unreachable!("date storage") };
                    let min = v.iter().flatten().min().ok_or_else(|| Error::AllMissing(column.clone()))?;
                    Resolution::Anchor(*min)
                }
            }
        }
        TransformStep::BinQuantiles { column, q } => {
            if *q < 2 {
                return Err(Error::InvalidParameter(format!("q must be at least 2, got {q}")));
            }
            let mut values = present_numbers(ds, column)?;
            values.sort_by(f64::total_cmp);
            let mut distinct = values.clone();
            distinct.dedup();
            if distinct.len() < *q {
                return Err(Error::InvalidParameter(format!(
                    "{column:?} has {} distinct values, fewer than q = {q}",
                    distinct.len()
                )));
            }
            let (min, max) = (values[0], values[values.len() - 1]);
            let mut cuts: Vec<f64> = Vec::with_capacity(q - 1);
            for j in 1..*q {
                let c = nearest_rank(&values, j, *q);
                // empty bins from tied cut points are dropped
                if c > min && cuts.last().is_none_or(|&last| c > last) {
                    cuts.push(c);
                }
            }
            let mut edges = vec![min];
            edges.extend(&cuts);
            edges.push(max);
            let bins = edges.len() - 1;
            let labels = (0..bins)
                .map(|i| {
                    let close = if i + 1 == bins { "]" } else { ")" };
                    format!("[{}, {}{close}", format_numeric(edges[i]), format_numeric(edges[i + 1]))
                })
                .collect();
            Resolution::Cuts { cuts, labels }
        }
        _ => Resolution::None,
    })
}

fn categorical(field: &Field, levels: Vec<String>) -> Field {
    Field { kind: ValueKind::Categorical, levels: Some(levels), ..field.clone() }
}

/// Replaces a numeric column by interval labels. `bin_of` returns the bin
/// index of a value.
fn bin_numeric(
    ds: &Dataset,
    column: &str,
    labels: Vec<String>,
    bin_of: impl Fn(f64) -> Result<usize>,
) -> Result<Executed> {
    let idx = ds.column_index(column)?;
    let field = &ds.schema().fields()[idx];
    require_kind(field, &[ValueKind::Numeric], "Numeric")?;
    let col = &ds.columns()[idx];
    let ColumnData::Number(values) = col.data() else { unreachable!("numeric storage") };
    let mut cells = 0;
    let text = values
        .iter()
        .map(|v| {
            v.map(|v| {
                cells += 1;
                bin_of(v).map(|b| labels[b].clone())
            })
            .transpose()
        })
        .collect::<Result<Vec<_>>>()?;
    let new_col = Column::with_marks(ColumnData::Text(text), col.marks().clone());
    let dataset = ds.replace_column(idx, categorical(field, labels), new_col)?;
    Ok(Executed { dataset, affected_rows: cells, affected_cells: cells })
}

fn interval_label(lo: f64, hi: f64, closed: bool) -> String {
    format!("[{}, {}{}", format_numeric(lo), format_numeric(hi), if closed { "]" } else { ")" })
}

pub fn execute(ds: &Dataset, step: &TransformStep, resolution: &Resolution) -> Result<Executed> {
    let n = ds.row_count();
    match (step, resolution) {
        (TransformStep::SuppressCells { column, symbol, .. }, Resolution::Rows(rows)) => {
            let idx = ds.column_index(column)?;
            let mut field = ds.schema().fields()[idx].clone();
            field.missing_tokens.insert(symbol.clone());
            let mark = (symbol != field.missing_render()).then_some(symbol.as_str());
            let col = ds.columns()[idx].with_missing(rows, mark);
            Ok(Executed { dataset: ds.replace_column(idx, field, col)?, affected_rows: rows.len(), affected_cells: rows.len() })
        }
        (TransformStep::SuppressDuplicateRows { .. }, Resolution::Rows(kept)) => Ok(Executed {
            dataset: ds.take_rows(kept),
            affected_rows: n - kept.len(),
            affected_cells: (n - kept.len()) * ds.schema().len(),
        }),
        (TransformStep::RecodeCategories { column, mapping }, _) => {
            let idx = ds.column_index(column)?;
            let field = &ds.schema().fields()[idx];
            require_kind(field, &[ValueKind::Categorical], "Categorical")?;
            let col = &ds.columns()[idx];
            let ColumnData::Text(values) = col.data() else { unreachable!("text storage") };
            let mut marks = col.marks().clone();
            let mut changed = 0;
            let text: Vec<Option<String>> = values
                .iter()
                .enumerate()
                .map(|(r, v)| match v.as_ref().and_then(|v| mapping.get(v)) {
                    Some(new) => {
                        changed += 1;
                        if field.is_missing_token(new) {
                            if new != field.missing_render() {
                                marks.insert(r, new.clone());
                            }
                            None
                        } else {
                            Some(new.clone())
                        }
                    }
                    None => v.clone(),
                })
                .collect();
            let mut new_field = field.clone();
            if let Some(levels) = &field.levels {
                let mut out: Vec<String> = Vec::new();
                for l in levels {
                    let m = mapping.get(l).unwrap_or(l);
                    if !field.is_missing_token(m) && !out.contains(m) {
                        out.push(m.clone());
                    }
                }
                new_field.levels = Some(out);
            }
            let dataset = ds.replace_column(idx, new_field, Column::with_marks(ColumnData::Text(text), marks))?;
            Ok(Executed { dataset, affected_rows: changed, affected_cells: changed })
        }
        (TransformStep::TruncateDateTime { column }, _) => {
            let idx = ds.column_index(column)?;
            let field = &ds.schema().fields()[idx];
            require_kind(field, &[ValueKind::DateTime], "DateTime")?;
            let days = ds.day_values(column)?;
            let cells = days.iter().flatten().count();
            let col = Column::with_marks(ColumnData::Day(days), ds.columns()[idx].marks().clone());
            let new_field = Field { kind: ValueKind::Date, ..field.clone() };
            Ok(Executed { dataset: ds.replace_column(idx, new_field, col)?, affected_rows: cells, affected_cells: cells })
        }
        (TransformStep::GeneralizeDatePeriod { column, period_days, .. }, Resolution::Anchor(anchor)) => {
            let idx = ds.column_index(column)?;
            let field = &ds.schema().fields()[idx];
            require_kind(field, &[ValueKind::Date], "Date")?;
            let col = &ds.columns()[idx];
            let ColumnData::Day(days) = col.data() else { unreachable!("date storage") };
            let period = *period_days;
            let bucket = |d: i32| (d as i64 - *anchor as i64).div_euclid(period);
            let label = |b: i64| {
                let start = *anchor as i64 + b * period;
                format!("{}–{}", format_date(start as i32), format_date((start + period - 1) as i32))
            };
            let present: Vec<i64> = days.iter().flatten().map(|&d| bucket(d)).collect();
            let levels = match (present.iter().min(), present.iter().max()) {
                (Some(&lo), Some(&hi)) => (lo..=hi).map(label).collect(),
                _ => Vec::new(),
            };
            let text: Vec<Option<String>> = days.iter().map(|d| d.map(|d| label(bucket(d)))).collect();
            let cells = present.len();
            let new_col = Column::with_marks(ColumnData::Text(text), col.marks().clone());
            let dataset = ds.replace_column(idx, categorical(field, levels), new_col)?;
            Ok(Executed { dataset, affected_rows: cells, affected_cells: cells })
        }
        (TransformStep::BinFixedWidth { column, width, origin }, _) => {
            if !(width.is_finite() && *width > 0.0) {
                return Err(Error::InvalidParameter(format!("width must be positive, got {width}")));
            }
            let values = present_numbers(ds, column)?;
            let (w, o) = (*width, *origin);
            let index = |v: f64| -> i64 {
                let mut i = ((v - o) / w).floor() as i64;
                // keep the label truthful under floating-point rounding
                if v < o + i as f64 * w {
                    i -= 1;
                } else if v >= o + (i + 1) as f64 * w {
                    i += 1;
                }
                i
            };
            let lo = values.iter().map(|&v| index(v)).min().unwrap_or(0);
            let hi = values.iter().map(|&v| index(v)).max().unwrap_or(-1);
            let labels: Vec<String> = (lo..=hi)
                .map(|i| interval_label(o + i as f64 * w, o + (i + 1) as f64 * w, false))
                .collect();
            bin_numeric(ds, column, labels, |v| Ok((index(v) - lo) as usize))
        }
        (TransformStep::BinQuantiles { column, .. }, Resolution::Cuts { cuts, labels }) => {
            bin_numeric(ds, column, labels.clone(), |v| Ok(cuts.partition_point(|&c| c <= v)))
        }
        (TransformStep::BinCustomRanges { column, edges }, _) => {
            if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) || edges.iter().any(|e| !e.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "edges must be a strictly increasing list of at least two finite numbers, got {edges:?}"
                )));
            }
            let bins = edges.len() - 1;
            let labels = (0..bins).map(|i| interval_label(edges[i], edges[i + 1], i + 1 == bins)).collect();
            let (first, last) = (edges[0], edges[bins]);
            bin_numeric(ds, column, labels, |v| {
                if v < first || v > last {
                    return Err(Error::InvalidParameter(format!(
                        "value {} of {column:?} lies outside [{}, {}]",
                        format_numeric(v),
                        format_numeric(first),
                        format_numeric(last)
                    )));
                }
                Ok(edges.partition_point(|&e| e <= v).clamp(1, bins) - 1)
            })
        }
        (TransformStep::AddUniformIntegerNoise { column, lo, hi, seed }, _) => {
            if lo > hi {
                return Err(Error::InvalidParameter(format!("noise bounds lo = {lo} > hi = {hi}")));
            }
            let seed = seed.ok_or_else(|| Error::InvalidParameter("noise step needs a seed".into()))?;
            let idx = ds.column_index(column)?;
            let field = &ds.schema().fields()[idx];
            require_kind(field, &[ValueKind::Numeric, ValueKind::Date], "Numeric or Date")?;
            let col = &ds.columns()[idx];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (lo, hi) = (*lo, *hi);
            let mut cells = 0;
            let data = match col.data() {
                ColumnData::Number(v) => ColumnData::Number(
                    v.iter()
                        .map(|x| {
                            x.map(|x| {
                                cells += 1;
                                x + rng.random_range(lo..=hi) as f64
                            })
                        })
                        .collect(),
                ),
                ColumnData::Day(v) => ColumnData::Day(
                    v.iter()
                        .map(|x| {
                            x.map(|x| {
                                cells += 1;
                                (x as i64 + rng.random_range(lo..=hi)) as i32
                            })
                        })
                        .collect(),
                ),
                _ => unreachable!("kind checked"),
            };
            let new_col = Column::with_marks(data, col.marks().clone());
            Ok(Executed { dataset: ds.replace_column(idx, field.clone(), new_col)?, affected_rows: cells, affected_cells: cells })
        }
        (TransformStep::DropColumns { columns, .. }, _) => Ok(Executed {
            dataset: ds.drop_columns(columns)?,
            affected_rows: 0,
            affected_cells: columns.len() * n,
        }),
        (TransformStep::DeriveDuration { start, end, new_name, drop_sources, class }, _) => {
            let mut out = ds.derive_duration(start, end, new_name, *drop_sources)?;
            if let Some(class) = class {
                out = out.classify(&BTreeMap::from([(new_name.clone(), *class)]))?;
            }
            Ok(Executed { dataset: out, affected_rows: n, affected_cells: n })
        }
        (TransformStep::Classify { assignments }, _) => {
            Ok(Executed { dataset: ds.classify(assignments)?, affected_rows: 0, affected_cells: 0 })
        }
        (step, res) => Err(Error::InvalidParameter(format!("resolution {res:?} does not fit step {step}"))),
    }
}

/// Whether every non-missing cell of `before` is contained in the cell of
/// `after` on the same row: equal value, or an interval, date period or
/// category that covers it. `mapping` lists category merges.
pub fn cell_contains(before: Cell<'_>, after: Cell<'_>, mapping: Option<&BTreeMap<String, String>>) -> bool {
    match (before, after) {
        (Cell::Missing, _) | (_, Cell::Missing) => true,
        (Cell::Number(v), Cell::Text(label)) => parse_interval(label).is_some_and(|(lo, hi, closed)| {
            v >= lo && (v < hi || (closed && v == hi))
        }),
        (Cell::Day(d), Cell::Text(label)) => label
            .split_once('–')
            .and_then(|(a, b)| Some((crate::table::value::parse_date(a)?, crate::table::value::parse_date(b)?)))
            .is_some_and(|(a, b)| a <= d && d <= b),
        (Cell::Instant(s), Cell::Day(d)) => s.div_euclid(crate::table::value::SECONDS_PER_DAY) as i32 == d,
        (Cell::Text(a), Cell::Text(b)) => a == b || mapping.and_then(|m| m.get(a)).is_some_and(|m| m == b),
        (a, b) => a == b,
    }
}

fn parse_interval(label: &str) -> Option<(f64, f64, bool)> {
    let inner = label.strip_prefix('[')?;
    let (body, closed) = match inner.strip_suffix(']') {
        Some(b) => (b, true),
        None => (inner.strip_suffix(')')?, false),
    };
    let (lo, hi) = body.split_once(", ")?;
    Some((lo.parse().ok()?, hi.parse().ok()?, closed))
}
