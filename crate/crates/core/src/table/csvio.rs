use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::value::{parse_date, parse_datetime, parse_numeric};
use super::{Column, ColumnData, Dataset, Field, Schema, ValueKind};
use crate::error::{Error, Result};

/// Header plus data rows exactly as read, with the 1-based file line of
/// every data row.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub lines: Vec<u64>,
}

pub fn read_raw(source: impl Read) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let header = reader
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Csv { line: 1, message: "missing header row".into() });
    }
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(e, i as u64 + 2))?;
        lines.push(record.position().map_or(i as u64 + 2, |p| p.line()));
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(RawTable { header, rows, lines })
}

fn csv_error(err: csv::Error, fallback_line: u64) -> Error {
    let line = err.position().map_or(fallback_line, |p| p.line());
    let message = match err.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        _ => err.to_string(),
    };
    Error::Csv { line, message }
}

/// Chooses a kind per column by priority DateTime > Date > Numeric >
/// Categorical; a kind wins only if every non-missing cell parses under it.
/// Columns with no present values become Categorical.
pub fn infer_schema(raw: &RawTable) -> Result<Schema> {
    if raw.rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    let fields = raw
        .header
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let probe = Field::new(name.clone(), ValueKind::Categorical);
            let present: Vec<&str> = raw
                .rows
                .iter()
                .map(|r| r[c].as_str())
                .filter(|v| !probe.is_missing_token(v))
                .collect();
            let kind = if present.is_empty() {
                ValueKind::Categorical
            } else if present.iter().all(|v| parse_datetime(v).is_some()) {
                ValueKind::DateTime
            } else if present.iter().all(|v| parse_date(v).is_some()) {
                ValueKind::Date
            } else if present.iter().all(|v| parse_numeric(v).is_some()) {
                ValueKind::Numeric
            } else {
                ValueKind::Categorical
            };
            Field { kind, ..probe }
        })
        .collect();
    Schema::new(fields)
}

/// Reads a CSV document. Without a schema, one is inferred.
pub fn load_csv(source: impl Read, schema: Option<&Schema>) -> Result<Dataset> {
    let raw = read_raw(source)?;
    let schema = match schema {
        Some(s) => {
            let names: Vec<&str> = s.names().collect();
            if names != raw.header {
                return Err(Error::SchemaMismatch(format!(
                    "header {:?} does not match schema attributes {:?}",
                    raw.header, names
                )));
            }
            s.clone()
        }
        None => infer_schema(&raw)?,
    };
    from_raw(&raw, schema)
}

pub fn from_raw(raw: &RawTable, schema: Schema) -> Result<Dataset> {
    let columns = schema
        .fields()
        .iter()
        .enumerate()
        .map(|(c, field)| parse_column(raw, c, field))
        .collect::<Result<Vec<_>>>()?;
    if raw.rows.is_empty() {
        return Ok(Dataset::empty(schema));
    }
    Dataset::new(schema, columns)
}

fn parse_column(raw: &RawTable, c: usize, field: &Field) -> Result<Column> {
    let mut marks = BTreeMap::new();
    let cells = raw.rows.iter().enumerate().map(|(r, row)| {
        let v = row[c].as_str();
        if field.is_missing_token(v) {
            if v != field.missing_render() {
                marks.insert(r, v.to_string());
            }
            None
        } else {
            Some((r, v))
        }
    });
    let fail = |r: usize, v: &str| Error::Parse {
        column: field.name.clone(),
        line: raw.lines[r],
        value: v.to_string(),
        kind: field.kind,
    };
    let data = match field.kind {
        ValueKind::Numeric => ColumnData::Number(
            cells
                .map(|c| c.map(|(r, v)| parse_numeric(v).ok_or_else(|| fail(r, v))).transpose())
                .collect::<Result<_>>()?,
        ),
        ValueKind::Date => ColumnData::Day(
            cells
                .map(|c| c.map(|(r, v)| parse_date(v).ok_or_else(|| fail(r, v))).transpose())
                .collect::<Result<_>>()?,
        ),
        ValueKind::DateTime => ColumnData::Instant(
            cells
                .map(|c| c.map(|(r, v)| parse_datetime(v).ok_or_else(|| fail(r, v))).transpose())
                .collect::<Result<_>>()?,
        ),
        ValueKind::Categorical | ValueKind::Identifier => {
            let levels = field.levels.as_ref();
            ColumnData::Text(
                cells
                    .map(|c| {
                        c.map(|(r, v)| match levels {
                            Some(l) if !l.iter().any(|x| x == v) => Err(fail(r, v)),
                            _ => Ok(v.to_string()),
                        })
                        .transpose()
                    })
                    .collect::<Result<_>>()?,
            )
        }
    };
    Ok(Column::with_marks(data, marks))
}

pub fn write_csv(ds: &Dataset, sink: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(ds.schema().names()).map_err(io_error)?;
    let width = ds.schema().len();
    let mut record = Vec::with_capacity(width);
    for r in 0..ds.row_count() {
        record.clear();
        record.extend((0..width).map(|c| ds.render(r, c)));
        writer.write_record(record.iter().map(|s| s.as_bytes())).map_err(io_error)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn to_csv_string(ds: &Dataset) -> String {
    let mut buf = Vec::new();
    write_csv(ds, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

fn io_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Csv { line: 0, message: format!("{other:?}") },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Cell;

    fn age_gender() -> Schema {
        Schema::new(vec![Field::new("Age", ValueKind::Numeric), Field::new("Gender", ValueKind::Categorical)])
            .unwrap()
    }

    #[test]
    fn loads_with_declared_schema() {
        let ds = load_csv("Age,Gender\n67,M\n".as_bytes(), Some(&age_gender())).unwrap();
        assert_eq!(ds.row_count(), 1);
        assert_eq!(ds.column("Age").unwrap().1.cell(0), Cell::Number(67.0));
        assert_eq!(ds.column("Gender").unwrap().1.cell(0), Cell::Text("M"));
    }

    #[test]
    fn missing_tokens_become_missing() {
        let ds = load_csv("Age,Gender\nUnknown,M\nNA,\n".as_bytes(), Some(&age_gender())).unwrap();
        assert!(ds.column("Age").unwrap().1.is_missing(0));
        assert!(ds.column("Gender").unwrap().1.is_missing(1));
        // raw tokens survive a write
        assert_eq!(to_csv_string(&ds), "Age,Gender\nUnknown,M\nNA,\n");
    }

    #[test]
    fn parse_failure_names_column_and_line() {
        let err = load_csv("Age,Gender\nabc,M\n".as_bytes(), Some(&age_gender())).unwrap_err();
        match err {
            Error::Parse { column, line, .. } => {
                assert_eq!(column, "Age");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_row_reports_line() {
        let err = load_csv("Age,Gender\n1,F\n2\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn header_must_match_schema() {
        let err = load_csv("Gender,Age\nM,1\n".as_bytes(), Some(&age_gender())).unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch(_)));
    }

    #[test]
    fn inference_priority() {
        let csv = "T,D,N,C,E\n2020/03/15 14:22:01,2020/03/15,12,12,Unknown\n2020-03-16 00:00:00,2020-03-16,1.5,F,NA\n";
        let ds = load_csv(csv.as_bytes(), None).unwrap();
        let kinds: Vec<ValueKind> = ds.schema().fields().iter().map(|f| f.kind).collect();
        assert_eq!(
            kinds,
            [ValueKind::DateTime, ValueKind::Date, ValueKind::Numeric, ValueKind::Categorical, ValueKind::Categorical]
        );
        assert!(ds.schema().fields().iter().all(|f| f.class == crate::table::AttributeClass::Insensitive));
    }

    #[test]
    fn inference_needs_rows() {
        assert!(matches!(load_csv("A,B\n".as_bytes(), None), Err(Error::EmptyTable)));
        let ds = load_csv("Age,Gender\n".as_bytes(), Some(&age_gender())).unwrap();
        assert_eq!(ds.row_count(), 0);
    }
}
