use thiserror::Error;

use crate::table::{AttributeClass, ValueKind};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("column {column:?}, line {line}: cannot parse {value:?} as {kind}")]
    Parse {
        column: String,
        line: u64,
        value: String,
        kind: ValueKind,
    },

    #[error("table has no data rows")]
    EmptyTable,

    #[error("dataset has no rows")]
    EmptyDataset,

    #[error("subset selected no rows")]
    EmptySubset,

    #[error("unknown attribute {0:?}")]
    UnknownColumn(String),

    #[error("duplicate attribute {0:?}")]
    DuplicateColumn(String),

    #[error("attribute {column:?} is {found}, expected {expected}")]
    KindMismatch {
        column: String,
        expected: String,
        found: ValueKind,
    },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("attribute {column:?} must be classified {expected}")]
    Classification {
        column: String,
        expected: AttributeClass,
    },

    #[error("malformed predicate: {0}")]
    MalformedPredicate(String),

    #[error("comparison {op} is not defined on attribute {column:?} ({kind})")]
    IncompatibleComparison {
        column: String,
        op: String,
        kind: ValueKind,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("attribute {0:?} has no non-missing values")]
    AllMissing(String),

    #[error("row counts differ: {left} vs {right}")]
    RowCountMismatch { left: usize, right: usize },

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn kind_mismatch(column: &str, expected: &str, found: ValueKind) -> Self {
        Error::KindMismatch {
            column: column.to_string(),
            expected: expected.to_string(),
            found,
        }
    }
}
