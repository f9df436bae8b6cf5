use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::keys::encode;
use super::Scenario;
use crate::error::{Error, Result};
use crate::table::{AttributeClass, Cell, Dataset, Predicate};

/// Records sharing one quasi-identifier tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceClass {
    /// Rendered QI values, in scenario order.
    pub key: Vec<String>,
    pub rows: Vec<usize>,
}

impl EquivalenceClass {
    pub fn size(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceClassPartition {
    pub scenario: Scenario,
    /// Classes in canonical QI-tuple order (missing first, then value order).
    pub classes: Vec<EquivalenceClass>,
    /// Size of the class each row belongs to.
    pub k_of_row: Vec<usize>,
}

impl EquivalenceClassPartition {
    pub fn row_count(&self) -> usize {
        self.k_of_row.len()
    }

    pub fn unique_count(&self) -> usize {
        self.k_of_row.iter().filter(|&&k| k == 1).count()
    }

    /// Number of classes of each size.
    pub fn k_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for c in &self.classes {
            *h.entry(c.size()).or_insert(0) += 1;
        }
        h
    }

    pub fn min_k(&self) -> usize {
        self.classes.iter().map(EquivalenceClass::size).min().unwrap_or(0)
    }
}

/// Singling-out risk of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskResult {
    pub scenario: Scenario,
    /// Percentage of records that are unique (k = 1) on the scenario.
    pub risk_percent: f64,
    pub unique_count: usize,
    pub row_count: usize,
    /// Class size k -> number of classes of that size.
    #[serde(deserialize_with = "numeric_keys")]
    pub k_histogram: BTreeMap<usize, usize>,
    pub min_k: usize,
}

// JSON object keys are strings; accept them inside tagged enums too.
fn numeric_keys<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<usize, usize>, D::Error> {
    BTreeMap::<String, usize>::deserialize(d)?
        .into_iter()
        .map(|(k, v)| k.parse().map(|k| (k, v)).map_err(serde::de::Error::custom))
        .collect()
}

/// Groups rows by exact QI tuple. Missing cells form their own value.
pub fn partition(ds: &Dataset, scenario: &Scenario) -> Result<EquivalenceClassPartition> {
    scenario.validate(ds.schema())?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let cols: Vec<usize> = scenario
        .qis()
        .iter()
        .map(|q| ds.column_index(q))
        .collect::<Result<_>>()?;
    let codes: Vec<Vec<u32>> = cols
        .iter()
        .map(|&c| encode(&ds.schema().fields()[c], &ds.columns()[c]))
        .collect();

    let mut groups: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    for r in 0..ds.row_count() {
        let key: Vec<u32> = codes.iter().map(|c| c[r]).collect();
        groups.entry(key).or_default().push(r);
    }
    let mut groups: Vec<(Vec<u32>, Vec<usize>)> = groups.into_iter().collect();
    groups.sort_unstable_by(|a, b| a.0.cmp(&b.0));

    let mut k_of_row = vec![0; ds.row_count()];
    let classes = groups
        .into_iter()
        .map(|(_, rows)| {
            for &r in &rows {
                k_of_row[r] = rows.len();
            }
            let key = cols.iter().map(|&c| ds.render(rows[0], c).into_owned()).collect();
            EquivalenceClass { key, rows }
        })
        .collect();
    Ok(EquivalenceClassPartition { scenario: scenario.clone(), classes, k_of_row })
}

pub(crate) fn risk_from_partition(p: &EquivalenceClassPartition) -> RiskResult {
    let unique_count = p.unique_count();
    let row_count = p.row_count();
    RiskResult {
        scenario: p.scenario.clone(),
        risk_percent: 100.0 * unique_count as f64 / row_count as f64,
        unique_count,
        row_count,
        k_histogram: p.k_histogram(),
        min_k: p.min_k(),
    }
}

pub fn k_anonymity_risk(ds: &Dataset, scenario: &Scenario) -> Result<RiskResult> {
    partition(ds, scenario).map(|p| risk_from_partition(&p))
}

/// k-anonymity risk computed within the rows selected by `predicate`.
pub fn subset_risk(ds: &Dataset, predicate: &Predicate, scenario: &Scenario) -> Result<RiskResult> {
    scenario.validate(ds.schema())?;
    let subset = ds.filter_subset(predicate)?;
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    k_anonymity_risk(&subset, scenario)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDiversity {
    pub key: Vec<String>,
    pub size: usize,
    /// Distinct non-missing sensitive values in the class.
    pub distinct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LDiversity {
    pub scenario: Scenario,
    pub sensitive: String,
    pub classes: Vec<ClassDiversity>,
    /// Minimum distinct count over classes holding at least one
    /// non-missing sensitive value.
    pub min_l: usize,
}

pub fn l_diversity(ds: &Dataset, scenario: &Scenario, sensitive: &str) -> Result<LDiversity> {
    let (field, column) = ds.column(sensitive)?;
    if field.class != AttributeClass::Sensitive {
        return Err(Error::Classification {
            column: sensitive.to_string(),
            expected: AttributeClass::Sensitive,
        });
    }
    if column.missing_count() == column.len() {
        return Err(Error::AllMissing(sensitive.to_string()));
    }
    let part = partition(ds, scenario)?;
    let codes = encode(field, column);
    let classes: Vec<ClassDiversity> = part
        .classes
        .iter()
        .map(|c| {
            let distinct = c
                .rows
                .iter()
                .filter(|&&r| !matches!(column.cell(r), Cell::Missing))
                .map(|&r| codes[r])
                .collect::<HashSet<_>>()
                .len();
            ClassDiversity { key: c.key.clone(), size: c.size(), distinct }
        })
        .collect();
    let min_l = classes
        .iter()
        .map(|c| c.distinct)
        .filter(|&d| d > 0)
        .min()
        .expect("some class holds a present sensitive value");
    Ok(LDiversity { scenario: scenario.clone(), sensitive: sensitive.to_string(), classes, min_l })
}
