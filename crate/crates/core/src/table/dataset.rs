use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap, HashSet};

use super::value::{format_date, format_datetime, format_numeric, SECONDS_PER_DAY};
use super::{AttributeClass, Field, Predicate, Schema, ValueKind};
use crate::error::{Error, Result};

/// Typed storage behind a column. Categorical and Identifier columns share
/// text storage; the schema carries the distinction.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Number(Vec<Option<f64>>),
    Text(Vec<Option<String>>),
    /// Days since 1970-01-01.
    Day(Vec<Option<i32>>),
    /// Seconds since 1970-01-01 00:00:00.
    Instant(Vec<Option<i64>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Number(v) => v.len(),
            ColumnData::Text(v) => v.len(),
            ColumnData::Day(v) => v.len(),
            ColumnData::Instant(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn fits(&self, kind: ValueKind) -> bool {
        matches!(
            (self, kind),
            (ColumnData::Number(_), ValueKind::Numeric)
                | (ColumnData::Text(_), ValueKind::Categorical | ValueKind::Identifier)
                | (ColumnData::Day(_), ValueKind::Date)
                | (ColumnData::Instant(_), ValueKind::DateTime)
        )
    }

    fn take(&self, rows: &[usize]) -> ColumnData {
        fn pick<T: Clone>(v: &[T], rows: &[usize]) -> Vec<T> {
            rows.iter().map(|&r| v[r].clone()).collect()
        }
        match self {
            ColumnData::Number(v) => ColumnData::Number(pick(v, rows)),
            ColumnData::Text(v) => ColumnData::Text(pick(v, rows)),
            ColumnData::Day(v) => ColumnData::Day(pick(v, rows)),
            ColumnData::Instant(v) => ColumnData::Instant(pick(v, rows)),
        }
    }
}

/// A single cell borrowed from a column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell<'a> {
    Missing,
    Number(f64),
    Text(&'a str),
    Day(i32),
    Instant(i64),
}

impl Cell<'_> {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

/// Column values plus the raw tokens of missing cells that should not be
/// rendered with the schema's canonical missing token (suppression symbols,
/// tokens read from input).
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    data: ColumnData,
    marks: BTreeMap<usize, String>,
}

impl Column {
    pub fn new(data: ColumnData) -> Self {
        Column { data, marks: BTreeMap::new() }
    }

    pub(crate) fn with_marks(data: ColumnData, marks: BTreeMap<usize, String>) -> Self {
        Column { data, marks }
    }

    pub fn numbers(values: Vec<Option<f64>>) -> Self {
        Column::new(ColumnData::Number(values))
    }

    pub fn text<S: Into<String>>(values: Vec<Option<S>>) -> Self {
        Column::new(ColumnData::Text(values.into_iter().map(|v| v.map(Into::into)).collect()))
    }

    pub fn days(values: Vec<Option<i32>>) -> Self {
        Column::new(ColumnData::Day(values))
    }

    pub fn instants(values: Vec<Option<i64>>) -> Self {
        Column::new(ColumnData::Instant(values))
    }

    pub fn data(&self) -> &ColumnData {
        &self.data
    }

    pub fn marks(&self) -> &BTreeMap<usize, String> {
        &self.marks
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn cell(&self, row: usize) -> Cell<'_> {
        match &self.data {
            ColumnData::Number(v) => v[row].map_or(Cell::Missing, Cell::Number),
            ColumnData::Text(v) => v[row].as_deref().map_or(Cell::Missing, Cell::Text),
            ColumnData::Day(v) => v[row].map_or(Cell::Missing, Cell::Day),
            ColumnData::Instant(v) => v[row].map_or(Cell::Missing, Cell::Instant),
        }
    }

    pub fn is_missing(&self, row: usize) -> bool {
        self.cell(row).is_missing()
    }

    pub fn missing_count(&self) -> usize {
        (0..self.len()).filter(|&r| self.is_missing(r)).count()
    }

    /// Copy with the given rows set to missing, each rendered as `mark`
    /// when one is given.
    pub(crate) fn with_missing(&self, rows: &[usize], mark: Option<&str>) -> Column {
        fn clear<T>(v: &mut [Option<T>], rows: &[usize]) {
            for &r in rows {
                v[r] = None;
            }
        }
        let mut data = self.data.clone();
        match &mut data {
            ColumnData::Number(v) => clear(v, rows),
            ColumnData::Text(v) => clear(v, rows),
            ColumnData::Day(v) => clear(v, rows),
            ColumnData::Instant(v) => clear(v, rows),
        }
        let mut marks = self.marks.clone();
        for &r in rows {
            match mark {
                Some(m) => marks.insert(r, m.to_string()),
                None => marks.remove(&r),
            };
        }
        Column { data, marks }
    }

    pub(crate) fn take(&self, rows: &[usize]) -> Column {
        let mut marks = BTreeMap::new();
        if !self.marks.is_empty() {
            for (new, &old) in rows.iter().enumerate() {
                if let Some(m) = self.marks.get(&old) {
                    marks.insert(new, m.clone());
                }
            }
        }
        Column { data: self.data.take(rows), marks }
    }
}

/// Immutable columnar table. Every operation returns a new dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    columns: Vec<Column>,
    rows: usize,
}

impl Dataset {
    pub fn new(schema: Schema, columns: Vec<Column>) -> Result<Self> {
        if schema.len() != columns.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} fields but {} columns",
                schema.len(),
                columns.len()
            )));
        }
        let rows = columns.first().map_or(0, Column::len);
        for (field, col) in schema.fields().iter().zip(&columns) {
            if col.len() != rows {
                return Err(Error::SchemaMismatch(format!(
                    "column {:?} has {} values, expected {rows}",
                    field.name,
                    col.len()
                )));
            }
            if !col.data.fits(field.kind) {
                return Err(Error::SchemaMismatch(format!(
                    "column {:?} storage does not match kind {}",
                    field.name, field.kind
                )));
            }
            if let (ColumnData::Text(values), Some(levels)) = (&col.data, &field.levels) {
                let known: HashSet<&str> = levels.iter().map(String::as_str).collect();
                if let Some(bad) = values.iter().flatten().find(|v| !known.contains(v.as_str())) {
                    return Err(Error::SchemaMismatch(format!(
                        "value {bad:?} of {:?} is not one of its levels",
                        field.name
                    )));
                }
            }
            if col.marks.keys().any(|&r| !col.is_missing(r)) {
                return Err(Error::SchemaMismatch(format!(
                    "column {:?} has a missing-marker on a present cell",
                    field.name
                )));
            }
        }
        Ok(Dataset { schema, columns, rows })
    }

    pub fn empty(schema: Schema) -> Self {
        let columns = schema
            .fields()
            .iter()
            .map(|f| {
                Column::new(match f.kind {
                    ValueKind::Numeric => ColumnData::Number(vec![]),
                    ValueKind::Categorical | ValueKind::Identifier => ColumnData::Text(vec![]),
                    ValueKind::Date => ColumnData::Day(vec![]),
                    ValueKind::DateTime => ColumnData::Instant(vec![]),
                })
            })
            .collect();
        Dataset { schema, columns, rows: 0 }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn row_count(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.schema.index_of(name).ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<(&Field, &Column)> {
        let idx = self.column_index(name)?;
        Ok((&self.schema.fields()[idx], &self.columns[idx]))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.schema.index_of(name).is_some()
    }

    /// Textual form of a cell as written to CSV.
    pub fn render(&self, row: usize, col: usize) -> Cow<'_, str> {
        let field = &self.schema.fields()[col];
        let column = &self.columns[col];
        render_cell(field, column, row)
    }

    pub fn take_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.take(rows)).collect(),
            rows: rows.len(),
        }
    }

    pub(crate) fn replace_column(&self, idx: usize, field: Field, column: Column) -> Result<Dataset> {
        let mut fields = self.schema.fields().to_vec();
        fields[idx] = field;
        let mut columns = self.columns.clone();
        columns[idx] = column;
        Dataset::new(Schema::new(fields)?, columns)
    }

    pub(crate) fn append_column(&self, field: Field, column: Column) -> Result<Dataset> {
        if self.has_column(&field.name) {
            return Err(Error::DuplicateColumn(field.name));
        }
        let mut fields = self.schema.fields().to_vec();
        fields.push(field);
        let mut columns = self.columns.clone();
        columns.push(column);
        Dataset::new(Schema::new(fields)?, columns)
    }

    /// Replaces attribute classes; data is untouched.
    pub fn classify(&self, assignments: &BTreeMap<String, AttributeClass>) -> Result<Dataset> {
        let mut schema = self.schema.clone();
        for name in assignments.keys() {
            if schema.index_of(name).is_none() {
                return Err(Error::UnknownColumn(name.clone()));
            }
        }
        for field in schema.fields_mut() {
            if let Some(class) = assignments.get(&field.name) {
                field.class = *class;
            }
        }
        Ok(Dataset { schema, columns: self.columns.clone(), rows: self.rows })
    }

    pub fn drop_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset> {
        let mut drop = HashSet::new();
        for n in names {
            drop.insert(self.column_index(n.as_ref())?);
        }
        let (fields, columns): (Vec<_>, Vec<_>) = self
            .schema
            .fields()
            .iter()
            .cloned()
            .zip(self.columns.iter().cloned())
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, fc)| fc)
            .unzip();
        Ok(Dataset { schema: Schema::new(fields)?, columns, rows: self.rows })
    }

    /// Calendar days from `start` to `end` (time of day ignored), appended as
    /// a new Numeric column.
    pub fn derive_duration(
        &self,
        start: &str,
        end: &str,
        new_name: &str,
        drop_sources: bool,
    ) -> Result<Dataset> {
        let s = self.day_values(start)?;
        let e = self.day_values(end)?;
        let values = s
            .iter()
            .zip(&e)
            .map(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => Some((*b as i64 - *a as i64) as f64),
                _ => None,
            })
            .collect();
        let out = self.append_column(Field::new(new_name, ValueKind::Numeric), Column::numbers(values))?;
        if drop_sources {
            out.drop_columns(&[start, end])
        } else {
            Ok(out)
        }
    }

    /// Calendar day of every cell in a Date or DateTime column.
    pub fn day_values(&self, name: &str) -> Result<Vec<Option<i32>>> {
        let (field, column) = self.column(name)?;
        match column.data() {
            ColumnData::Day(v) => Ok(v.clone()),
            ColumnData::Instant(v) => Ok(v
                .iter()
                .map(|s| s.map(|s| s.div_euclid(SECONDS_PER_DAY) as i32))
                .collect()),
            _ => Err(Error::kind_mismatch(name, "Date or DateTime", field.kind)),
        }
    }

    /// Rows satisfying every conjunct of `predicate`, in original order.
    pub fn filter_subset(&self, predicate: &Predicate) -> Result<Dataset> {
        let rows = predicate.matching_rows(self)?;
        if rows.len() == self.rows {
            return Ok(self.clone());
        }
        Ok(self.take_rows(&rows))
    }

    /// Cells as strings, row-major; convenient for tests and previews.
    pub fn to_rows(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|r| (0..self.columns.len()).map(|c| self.render(r, c).into_owned()).collect())
            .collect()
    }

    /// Counts of each rendered value, missing included, in first-seen order.
    pub fn value_counts(&self, name: &str) -> Result<Vec<(String, usize)>> {
        let idx = self.column_index(name)?;
        let mut order = Vec::new();
        let mut counts: HashMap<String, usize> = HashMap::new();
        for r in 0..self.rows {
            let v = self.render(r, idx).into_owned();
            let e = counts.entry(v.clone()).or_insert_with(|| {
                order.push(v);
                0
            });
            *e += 1;
        }
        Ok(order.into_iter().map(|v| {
            let c = counts[&v];
            (v, c)
        }).collect())
    }
}

pub(crate) fn render_cell<'a>(field: &'a Field, column: &'a Column, row: usize) -> Cow<'a, str> {
    match column.cell(row) {
        Cell::Missing => match column.marks.get(&row) {
            Some(m) => Cow::Borrowed(m.as_str()),
            None => Cow::Borrowed(field.missing_render()),
        },
        Cell::Number(v) => Cow::Owned(format_numeric(v)),
        Cell::Text(s) => Cow::Borrowed(s),
        Cell::Day(d) => Cow::Owned(format_date(d)),
        Cell::Instant(s) => Cow::Owned(format_datetime(s)),
    }
}

/// Position of a cell on its column's order: the value itself for numbers,
/// days and instants, the level index for ordered categories.
pub(crate) fn ordinal(field: &Field, column: &Column, row: usize) -> Option<f64> {
    match column.cell(row) {
        Cell::Missing => None,
        Cell::Number(v) => Some(v),
        Cell::Day(d) => Some(d as f64),
        Cell::Instant(s) => Some(s as f64),
        Cell::Text(t) => field
            .levels
            .as_ref()
            .and_then(|levels| levels.iter().position(|l| l == t))
            .map(|p| p as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::value::parse_date;

    fn stays() -> Dataset {
        let schema = Schema::new(vec![
            Field::new("Admit", ValueKind::Date),
            Field::new("Discharge", ValueKind::Date),
            Field::new("Gender", ValueKind::Categorical),
        ])
        .unwrap();
        Dataset::new(
            schema,
            vec![
                Column::days(vec![parse_date("2020/03/01"), parse_date("2020/03/05"), parse_date("2020/04/01")]),
                Column::days(vec![parse_date("2020/03/11"), parse_date("2020/03/05"), None]),
                Column::text(vec![Some("F"), Some("M"), Some("F")]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn duration_in_days() {
        let ds = stays().derive_duration("Admit", "Discharge", "Days", false).unwrap();
        let (field, col) = ds.column("Days").unwrap();
        assert_eq!(field.kind, ValueKind::Numeric);
        assert_eq!(col.cell(0), Cell::Number(10.0));
        assert_eq!(col.cell(1), Cell::Number(0.0));
        assert_eq!(col.cell(2), Cell::Missing);
        assert_eq!(ds.schema().len(), 4);
    }

    #[test]
    fn duration_drops_sources() {
        let ds = stays().derive_duration("Admit", "Discharge", "Days", true).unwrap();
        assert_eq!(ds.schema().names().collect::<Vec<_>>(), ["Gender", "Days"]);
    }

    #[test]
    fn duration_rejects_non_dates() {
        let err = stays().derive_duration("Gender", "Discharge", "Days", false).unwrap_err();
        assert!(matches!(err, Error::KindMismatch { column, .. } if column == "Gender"));
    }

    #[test]
    fn duration_ignores_time_of_day() {
        let schema = Schema::new(vec![
            Field::new("A", ValueKind::DateTime),
            Field::new("B", ValueKind::Date),
        ])
        .unwrap();
        let start = crate::table::value::parse_datetime("2020/03/01 23:59:59");
        let ds = Dataset::new(schema, vec![Column::instants(vec![start]), Column::days(vec![parse_date("2020/03/02")])])
            .unwrap();
        let out = ds.derive_duration("A", "B", "D", false).unwrap();
        assert_eq!(out.column("D").unwrap().1.cell(0), Cell::Number(1.0));
    }

    #[test]
    fn drop_and_classify() {
        let ds = stays();
        assert_eq!(ds.drop_columns::<&str>(&[]).unwrap(), ds);
        assert_eq!(ds.drop_columns(&["Admit", "Gender"]).unwrap().schema().len(), 1);
        assert!(matches!(ds.drop_columns(&["Nope"]), Err(Error::UnknownColumn(_))));

        let mut m = BTreeMap::new();
        m.insert("Gender".to_string(), AttributeClass::QuasiIdentifier);
        let c = ds.classify(&m).unwrap();
        assert_eq!(c.schema().field("Gender").unwrap().class, AttributeClass::QuasiIdentifier);
        assert_eq!(c.columns(), ds.columns());
        m.insert("Nonexistent".to_string(), AttributeClass::Sensitive);
        assert!(matches!(ds.classify(&m), Err(Error::UnknownColumn(n)) if n == "Nonexistent"));
    }

    #[test]
    fn ragged_columns_rejected() {
        let schema = Schema::new(vec![Field::new("A", ValueKind::Numeric), Field::new("B", ValueKind::Numeric)])
            .unwrap();
        let err = Dataset::new(schema, vec![Column::numbers(vec![Some(1.0)]), Column::numbers(vec![])]);
        assert!(matches!(err, Err(Error::SchemaMismatch(_))));
    }
}
