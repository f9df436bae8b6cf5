//! Privacy-preserving transformations. Each returns a new [`Dataset`] and a
//! provenance entry; inputs are never modified.

mod ops;
mod step;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use ops::{cell_contains, execute, resolve, Executed, Resolution};
pub use step::{DateAnchor, StepKind, TransformStep};

use crate::error::{Error, Result};
use crate::table::{AttributeClass, Dataset, Predicate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    /// The step as applied, noise seed included.
    pub step: TransformStep,
    pub kind: StepKind,
    pub affected_rows: usize,
    pub affected_cells: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Ordered record of applied steps. Replaying it on the original dataset
/// reproduces the transformed dataset exactly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Provenance {
    pub entries: Vec<ProvenanceEntry>,
}

impl Provenance {
    pub fn steps(&self) -> impl Iterator<Item = &TransformStep> {
        self.entries.iter().map(|e| &e.step)
    }

    pub fn replay(&self, original: &Dataset) -> Result<Dataset> {
        self.steps().try_fold(original.clone(), |ds, step| apply(&ds, step).map(|a| a.dataset))
    }

    /// Attributes distorted by a perturbative step, including attributes
    /// later derived from them.
    pub fn perturbed_columns(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for step in self.steps() {
            track_perturbation(step, &mut out);
        }
        out
    }
}

/// Updates the perturbed-attribute set after `step`.
pub fn track_perturbation(step: &TransformStep, perturbed: &mut BTreeSet<String>) {
    match step {
        TransformStep::AddUniformIntegerNoise { column, .. } => {
            perturbed.insert(column.clone());
        }
        TransformStep::DeriveDuration { start, end, new_name, .. }
            if perturbed.contains(start) || perturbed.contains(end) =>
        {
            perturbed.insert(new_name.clone());
        }
        _ => {}
    }
}

#[derive(Debug, Clone)]
pub struct Applied {
    pub dataset: Dataset,
    pub entry: ProvenanceEntry,
    pub resolution: Resolution,
}

/// Resolves and executes one step.
pub fn apply(ds: &Dataset, step: &TransformStep) -> Result<Applied> {
    let resolution = resolve(ds, step)?;
    let done = execute(ds, step, &resolution)?;
    let note = match step {
        TransformStep::DropColumns { reason: Some(r), .. } => Some(r.clone()),
        _ => resolution.note(),
    };
    Ok(Applied {
        dataset: done.dataset,
        entry: ProvenanceEntry {
            step: step.clone(),
            kind: step.kind(),
            affected_rows: done.affected_rows,
            affected_cells: done.affected_cells,
            note,
        },
        resolution,
    })
}

/// Applies steps in order, accumulating provenance.
pub fn apply_all(ds: &Dataset, steps: &[TransformStep]) -> Result<(Dataset, Provenance)> {
    let mut current = ds.clone();
    let mut provenance = Provenance::default();
    for step in steps {
        let applied = apply(&current, step)?;
        current = applied.dataset;
        provenance.entries.push(applied.entry);
    }
    Ok((current, provenance))
}

pub fn suppress_cells(ds: &Dataset, column: &str, predicate: &Predicate, symbol: &str) -> Result<Dataset> {
    let step = TransformStep::SuppressCells {
        column: column.into(),
        predicate: predicate.clone(),
        symbol: symbol.into(),
    };
    apply(ds, &step).map(|a| a.dataset)
}

pub fn suppress_duplicate_rows<S: AsRef<str>>(ds: &Dataset, key_columns: &[S], order_column: &str) -> Result<Dataset> {
    let step = TransformStep::SuppressDuplicateRows {
        key_columns: key_columns.iter().map(|s| s.as_ref().to_string()).collect(),
        order_column: order_column.into(),
    };
    apply(ds, &step).map(|a| a.dataset)
}

pub fn truncate_datetime(ds: &Dataset, column: &str) -> Result<Dataset> {
    apply(ds, &TransformStep::TruncateDateTime { column: column.into() }).map(|a| a.dataset)
}

pub fn generalize_date_period(ds: &Dataset, column: &str, period_days: i64, anchor: DateAnchor) -> Result<Dataset> {
    let step = TransformStep::GeneralizeDatePeriod { column: column.into(), period_days, anchor };
    apply(ds, &step).map(|a| a.dataset)
}

pub fn recode_categories(ds: &Dataset, column: &str, mapping: &BTreeMap<String, String>) -> Result<Dataset> {
    let step = TransformStep::RecodeCategories { column: column.into(), mapping: mapping.clone() };
    apply(ds, &step).map(|a| a.dataset)
}

pub fn bin_fixed_width(ds: &Dataset, column: &str, width: f64, origin: f64) -> Result<Dataset> {
    apply(ds, &TransformStep::BinFixedWidth { column: column.into(), width, origin }).map(|a| a.dataset)
}

pub fn bin_quantiles(ds: &Dataset, column: &str, q: usize) -> Result<Dataset> {
    apply(ds, &TransformStep::BinQuantiles { column: column.into(), q }).map(|a| a.dataset)
}

pub fn bin_custom_ranges(ds: &Dataset, column: &str, edges: &[f64]) -> Result<Dataset> {
    apply(ds, &TransformStep::BinCustomRanges { column: column.into(), edges: edges.to_vec() }).map(|a| a.dataset)
}

pub fn add_uniform_integer_noise(ds: &Dataset, column: &str, lo: i64, hi: i64, seed: u64) -> Result<Dataset> {
    let step = TransformStep::AddUniformIntegerNoise { column: column.into(), lo, hi, seed: Some(seed) };
    apply(ds, &step).map(|a| a.dataset)
}

pub fn drop_columns_with_reason<S: AsRef<str>>(ds: &Dataset, columns: &[S], reason: &str) -> Result<Applied> {
    let step = TransformStep::DropColumns {
        columns: columns.iter().map(|s| s.as_ref().to_string()).collect(),
        reason: Some(reason.to_string()),
    };
    apply(ds, &step)
}

pub fn classify_step(assignments: &[(&str, AttributeClass)]) -> TransformStep {
    TransformStep::Classify {
        assignments: assignments.iter().map(|(n, c)| (n.to_string(), *c)).collect(),
    }
}

/// Variable-width bin edges with roughly equal counts per bin, no bin
/// narrower than `min_width`. The result covers the observed range and can
/// be passed to [`bin_custom_ranges`].
pub fn equal_frequency_edges(ds: &Dataset, column: &str, bins: usize, min_width: f64) -> Result<Vec<f64>> {
    if bins == 0 || !(min_width > 0.0) {
        return Err(Error::InvalidParameter("bins must be positive and min_width > 0".into()));
    }
    let (field, col) = ds.column(column)?;
    if field.kind != crate::table::ValueKind::Numeric {
        return Err(Error::kind_mismatch(column, "Numeric", field.kind));
    }
    let mut values: Vec<f64> = (0..col.len())
        .filter_map(|r| match col.cell(r) {
            crate::table::Cell::Number(v) => Some(v),
            _ => None,
        })
        .collect();
    if values.is_empty() {
        return Err(Error::AllMissing(column.to_string()));
    }
    values.sort_by(f64::total_cmp);
    let (min, max) = (values[0], values[values.len() - 1]);
    let mut edges = vec![min];
    for j in 1..bins {
        let candidate = values[(j * values.len()) / bins];
        let prev = *edges.last().expect("non-empty");
        let edge = candidate.max(prev + min_width);
        if max - edge >= min_width && edge > prev {
            edges.push(edge);
        }
    }
    let prev = *edges.last().expect("non-empty");
    edges.push(if max > prev { max } else { prev + min_width });
    Ok(edges)
}

#[cfg(test)]
mod tests;
