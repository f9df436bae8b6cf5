use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{k_anonymity_risk, record_linkage, DistanceSpec, LinkageResult, RiskResult, Scenario};
use crate::error::Result;
use crate::table::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    KAnonymity,
    RecordLinkage,
}

/// Outcome of assessing one scenario, tagged by the metric used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric")]
pub enum Assessment {
    KAnonymity(RiskResult),
    RecordLinkage(LinkageResult),
}

impl Assessment {
    pub fn metric(&self) -> Metric {
        match self {
            Assessment::KAnonymity(_) => Metric::KAnonymity,
            Assessment::RecordLinkage(_) => Metric::RecordLinkage,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        match self {
            Assessment::KAnonymity(r) => &r.scenario,
            Assessment::RecordLinkage(r) => &r.scenario,
        }
    }

    /// Singling-out rate for k-anonymity, total match rate for linkage.
    pub fn risk_percent(&self) -> f64 {
        match self {
            Assessment::KAnonymity(r) => r.risk_percent,
            Assessment::RecordLinkage(r) => r.risk_percent(),
        }
    }

    pub fn min_k(&self) -> Option<usize> {
        match self {
            Assessment::KAnonymity(r) => Some(r.min_k),
            Assessment::RecordLinkage(_) => None,
        }
    }

    /// Drops per-record linkage assignments.
    pub fn summary(&self) -> Assessment {
        match self {
            Assessment::KAnonymity(r) => Assessment::KAnonymity(r.clone()),
            Assessment::RecordLinkage(r) => Assessment::RecordLinkage(r.summary()),
        }
    }
}

/// Metric for a scenario: record linkage once any of its attributes has been
/// perturbed, k-anonymity otherwise.
pub fn select_metric(scenario: &Scenario, perturbed_columns: &BTreeSet<String>) -> Metric {
    if scenario.qis().iter().any(|q| perturbed_columns.contains(q)) {
        Metric::RecordLinkage
    } else {
        Metric::KAnonymity
    }
}

pub fn assess_scenario(
    attacker_view: &Dataset,
    protected: &Dataset,
    scenario: &Scenario,
    spec: &DistanceSpec,
    perturbed_columns: &BTreeSet<String>,
) -> Result<Assessment> {
    Ok(match select_metric(scenario, perturbed_columns) {
        Metric::KAnonymity => Assessment::KAnonymity(k_anonymity_risk(protected, scenario)?),
        Metric::RecordLinkage => {
            Assessment::RecordLinkage(record_linkage(attacker_view, protected, scenario, spec)?)
        }
    })
}

/// Assesses every scenario, in order, with the metric its attributes call for.
pub fn assess_matrix(
    attacker_view: &Dataset,
    protected: &Dataset,
    scenarios: &[Scenario],
    spec: &DistanceSpec,
    perturbed_columns: &BTreeSet<String>,
) -> Result<Vec<Assessment>> {
    scenarios
        .iter()
        .map(|s| assess_scenario(attacker_view, protected, s, spec, perturbed_columns))
        .collect()
}
