//! Order-preserving dictionary codes for cell values. Code 0 is the missing
//! sentinel, so missing cells group together and sort first.

use std::collections::{BTreeMap, HashMap};

use crate::error::Result;
use crate::table::{Cell, Column, Dataset, Field};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Key<'a> {
    Number(u64),
    Level(usize),
    Text(&'a str),
    Day(i32),
    Instant(i64),
}

/// Maps an f64 onto u64 preserving numeric order.
fn ordered_bits(v: f64) -> u64 {
    let v = if v == 0.0 { 0.0 } else { v };
    let bits = v.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

fn key<'a>(levels: Option<&HashMap<&str, usize>>, cell: Cell<'a>) -> Option<Key<'a>> {
    match cell {
        Cell::Missing => None,
        Cell::Number(v) => Some(Key::Number(ordered_bits(v))),
        Cell::Text(t) => Some(match levels.and_then(|l| l.get(t)) {
            Some(&p) => Key::Level(p),
            None => Key::Text(t),
        }),
        Cell::Day(d) => Some(Key::Day(d)),
        Cell::Instant(s) => Some(Key::Instant(s)),
    }
}

/// Encodes one or more columns (same attribute, possibly from different
/// datasets) with a shared dictionary.
pub(crate) fn encode_shared(parts: &[(&Field, &Column)]) -> Vec<Vec<u32>> {
    let level_maps: Vec<Option<HashMap<&str, usize>>> = parts
        .iter()
        .map(|(f, _)| {
            f.levels
                .as_ref()
                .map(|l| l.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect())
        })
        .collect();
    // Levels are only comparable when every part shares the same list.
    let shared_levels = parts.iter().all(|(f, _)| f.levels == parts[0].0.levels);
    let keys: Vec<Vec<Option<Key>>> = parts
        .iter()
        .zip(&level_maps)
        .map(|((_, column), lm)| {
            let lm = if shared_levels { lm.as_ref() } else { None };
            (0..column.len()).map(|r| key(lm, column.cell(r))).collect()
        })
        .collect();
    let mut dict: BTreeMap<&Key, u32> = keys.iter().flatten().flatten().map(|k| (k, 0)).collect();
    for (i, code) in dict.values_mut().enumerate() {
        *code = i as u32 + 1;
    }
    keys.iter()
        .map(|col| col.iter().map(|k| k.as_ref().map_or(0, |k| dict[k])).collect())
        .collect()
}

/// Per-row code tuples over the named columns.
pub(crate) fn keys_for_rows<S: AsRef<str>>(ds: &Dataset, columns: &[S]) -> Result<Vec<Vec<u32>>> {
    let codes = columns
        .iter()
        .map(|c| {
            let (f, col) = ds.column(c.as_ref())?;
            Ok(encode(f, col))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..ds.row_count()).map(|r| codes.iter().map(|c| c[r]).collect()).collect())
}

pub(crate) fn encode(field: &Field, column: &Column) -> Vec<u32> {
    encode_shared(&[(field, column)]).pop().expect("one part")
}
