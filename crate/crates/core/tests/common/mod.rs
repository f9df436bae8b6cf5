#![allow(dead_code)]

use std::collections::BTreeMap;

use deid_core::risk::Scenario;
use deid_core::table::{AttributeClass, Cell, Column, Dataset, Field, Schema, ValueKind};
use rand::Rng;

pub const KINDS: [ValueKind; 4] = [ValueKind::Numeric, ValueKind::Categorical, ValueKind::Date, ValueKind::DateTime];

/// Random table of `n` rows with `cols` quasi-identifier columns named
/// Q0, Q1, ... Small value domains force collisions; about one cell in
/// twelve is missing.
pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, cols: usize) -> Dataset {
    let kinds: Vec<ValueKind> = (0..cols).map(|_| KINDS[rng.random_range(0..KINDS.len())]).collect();
    random_dataset_of(rng, n, &kinds)
}

/// As `random_dataset`, with one column per entry of `kinds`.
pub fn random_dataset_of<R: Rng>(rng: &mut R, n: usize, kinds: &[ValueKind]) -> Dataset {
    let mut fields = vec![];
    let mut columns = vec![];
    for (c, &kind) in kinds.iter().enumerate() {
        let domain = rng.random_range(1..=8);
        let draw = |rng: &mut R| (rng.random_range(0..12) != 0).then(|| rng.random_range(0..domain));
        let column = match kind {
            ValueKind::Numeric => Column::numbers((0..n).map(|_| draw(rng).map(|v| v as f64 * 2.5)).collect()),
            ValueKind::Categorical => {
                Column::text((0..n).map(|_| draw(rng).map(|v| format!("c{v}"))).collect::<Vec<_>>())
            }
            ValueKind::Date => Column::days((0..n).map(|_| draw(rng).map(|v| 18_300 + v * 3)).collect()),
            _ => Column::instants((0..n).map(|_| draw(rng).map(|v| 1_585_000_000 + v as i64 * 3_700)).collect()),
        };
        fields.push(Field::new(format!("Q{c}"), kind).with_class(AttributeClass::QuasiIdentifier));
        columns.push(column);
    }
    Dataset::new(Schema::new(fields).unwrap(), columns).unwrap()
}

pub fn scenario_of(names: &[String]) -> Scenario {
    Scenario::new(names.iter().cloned()).unwrap()
}

pub fn all_columns(ds: &Dataset) -> Vec<String> {
    ds.schema().names().map(str::to_string).collect()
}

fn same_cell(a: Cell<'_>, b: Cell<'_>) -> bool {
    match (a, b) {
        (Cell::Missing, Cell::Missing) => true,
        (Cell::Number(x), Cell::Number(y)) => x == y,
        (Cell::Text(x), Cell::Text(y)) => x == y,
        (Cell::Day(x), Cell::Day(y)) => x == y,
        (Cell::Instant(x), Cell::Instant(y)) => x == y,
        _ => false,
    }
}

#[derive(Debug, PartialEq)]
pub struct OracleRisk {
    pub unique: usize,
    pub risk_percent: f64,
    pub k_histogram: BTreeMap<usize, usize>,
    pub min_k: usize,
    pub k_of_row: Vec<usize>,
}

/// Compares every pair of rows on the scenario columns.
pub fn kanon_oracle(ds: &Dataset, qis: &[String]) -> OracleRisk {
    let cols: Vec<&Column> = qis.iter().map(|q| ds.column(q).unwrap().1).collect();
    let n = ds.row_count();
    let k_of_row: Vec<usize> = (0..n)
        .map(|i| (0..n).filter(|&j| cols.iter().all(|c| same_cell(c.cell(i), c.cell(j)))).count())
        .collect();
    let unique = k_of_row.iter().filter(|&&k| k == 1).count();
    let mut rows_by_k: BTreeMap<usize, usize> = BTreeMap::new();
    for &k in &k_of_row {
        *rows_by_k.entry(k).or_default() += 1;
    }
    OracleRisk {
        unique,
        risk_percent: 100.0 * unique as f64 / n as f64,
        k_histogram: rows_by_k.into_iter().map(|(k, rows)| (k, rows / k)).collect(),
        min_k: k_of_row.iter().copied().min().unwrap_or(0),
        k_of_row,
    }
}

fn as_number(cell: Cell<'_>) -> Option<f64> {
    match cell {
        Cell::Number(v) => Some(v),
        Cell::Day(d) => Some(d as f64),
        Cell::Instant(s) => Some(s as f64),
        _ => None,
    }
}

#[derive(Debug, PartialEq, Eq)]
pub struct OracleLinkage {
    pub correct: usize,
    pub wrong: usize,
    pub ambiguous: usize,
}

/// Nearest-neighbour linkage by exhaustive search with default column
/// rules: exact match for text, range-scaled absolute difference for
/// numbers and dates, distance 1 whenever either cell is missing.
pub fn linkage_oracle(attacker: &Dataset, protected: &Dataset, qis: &[String]) -> OracleLinkage {
    let n = protected.row_count();
    let mut per_column: Vec<Box<dyn Fn(usize, usize) -> f64 + '_>> = vec![];
    for q in qis {
        let (field, a) = attacker.column(q).unwrap();
        let (_, p) = protected.column(q).unwrap();
        if field.kind == ValueKind::Categorical || field.kind == ValueKind::Identifier {
            per_column.push(Box::new(move |i, j| match (a.cell(i), p.cell(j)) {
                (Cell::Text(x), Cell::Text(y)) if x == y => 0.0,
                _ => 1.0,
            }));
        } else {
            let values: Vec<f64> = (0..n).flat_map(|r| [as_number(a.cell(r)), as_number(p.cell(r))]).flatten().collect();
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let range = if values.is_empty() { 0.0 } else { hi - lo };
            per_column.push(Box::new(move |i, j| match (as_number(a.cell(i)), as_number(p.cell(j))) {
                (Some(x), Some(y)) if range > 0.0 => (x - y).abs() / range,
                (Some(_), Some(_)) => 0.0,
                _ => 1.0,
            }));
        }
    }
    let width = per_column.len() as f64;
    let mut out = OracleLinkage { correct: 0, wrong: 0, ambiguous: 0 };
    for j in 0..n {
        let d: Vec<f64> = (0..n).map(|i| per_column.iter().map(|f| f(i, j)).sum::<f64>() / width).collect();
        let best = d.iter().copied().fold(f64::INFINITY, f64::min);
        let winners: Vec<usize> = (0..n).filter(|&i| d[i] == best).collect();
        match winners.as_slice() {
            [only] if *only == j => out.correct += 1,
            [_] => out.wrong += 1,
            _ => out.ambiguous += 1,
        }
    }
    out
}
