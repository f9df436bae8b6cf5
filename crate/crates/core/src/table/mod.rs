//! Immutable tabular data: schema with privacy classification, typed
//! columnar storage, CSV ingestion and structural operations.

mod csvio;
mod dataset;
mod predicate;
mod schema;
pub mod value;

pub use csvio::{from_raw, infer_schema, load_csv, read_raw, to_csv_string, write_csv, RawTable};
pub use dataset::{Cell, Column, ColumnData, Dataset};
pub(crate) use dataset::ordinal;
pub use predicate::{Comparator, Condition, Predicate};
pub use schema::{default_missing_tokens, Field, Schema, CANONICAL_MISSING, DEFAULT_MISSING_TOKENS};
pub use value::{AttributeClass, ValueKind};
