//! Statistical disclosure control for tabular microdata: measure
//! re-identification risk under attacker scenarios, apply privacy-preserving
//! transformations, and iterate until risk and utility balance.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod risk;
pub mod synth;
pub mod table;
pub mod transform;
pub mod pipeline;

pub use error::{Error, Result};
pub use table::{AttributeClass, Dataset, Field, Predicate, Schema, ValueKind};
