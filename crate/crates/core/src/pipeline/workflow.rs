use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::utility::{compare, UtilityDiagnostic};
use super::SubsetSpec;
use crate::error::{Error, Result};
use crate::risk::{assess_scenario, Assessment, DistanceSpec, Scenario};
use crate::table::{Dataset, Predicate};
use crate::transform::{apply, execute, track_perturbation, Applied, Provenance, ProvenanceEntry, TransformStep};

/// Risk of one scenario, or the attributes that keep it from being assessed
/// at this point of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRisk {
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assessment: Option<Assessment>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing_columns: Vec<String>,
}

impl ScenarioRisk {
    pub fn risk_percent(&self) -> Option<f64> {
        self.assessment.as_ref().map(Assessment::risk_percent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetRisk {
    pub name: String,
    pub predicate: Predicate,
    /// Absent when the predicate refers to a column not in the data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_count: Option<usize>,
    pub risks: Vec<ScenarioRisk>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub row_count: usize,
    pub scenarios: Vec<ScenarioRisk>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subsets: Vec<SubsetRisk>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    /// 1-based position in the run.
    pub index: usize,
    pub descriptor: String,
    pub entry: ProvenanceEntry,
    pub rows_before: usize,
    pub before: Vec<ScenarioRisk>,
    pub after: Snapshot,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub utility: Vec<UtilityDiagnostic>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkflowConfig {
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub subsets: Vec<SubsetSpec>,
    #[serde(default)]
    pub distance_spec: DistanceSpec,
    #[serde(default)]
    pub seed: u64,
}

/// Seed for a noise step that does not set its own.
pub fn step_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Applies `step` to the protected data and, unless it perturbs, to the
/// attacker view with the same resolved parameters.
fn advance(protected: &Dataset, attacker: &Dataset, step: &TransformStep) -> Result<(Applied, Dataset)> {
    let applied = apply(protected, step)?;
    let attacker = if step.is_perturbative() {
        attacker.clone()
    } else {
        execute(attacker, step, &applied.resolution)?.dataset
    };
    Ok((applied, attacker))
}

fn assess_one(
    attacker: &Dataset,
    protected: &Dataset,
    scenario: &Scenario,
    spec: &DistanceSpec,
    perturbed: &BTreeSet<String>,
) -> Result<ScenarioRisk> {
    let missing_columns = scenario.missing_from(protected.schema());
    let assessment = if missing_columns.is_empty() {
        Some(assess_scenario(attacker, protected, scenario, spec, perturbed)?.summary())
    } else {
        None
    };
    Ok(ScenarioRisk { scenario: scenario.clone(), assessment, missing_columns })
}

fn assess_all(
    attacker: &Dataset,
    protected: &Dataset,
    scenarios: &[Scenario],
    spec: &DistanceSpec,
    perturbed: &BTreeSet<String>,
) -> Result<Vec<ScenarioRisk>> {
    scenarios.par_iter().map(|s| assess_one(attacker, protected, s, spec, perturbed)).collect()
}

fn assess_subset(
    attacker: &Dataset,
    protected: &Dataset,
    subset: &SubsetSpec,
    spec: &DistanceSpec,
    perturbed: &BTreeSet<String>,
) -> Result<SubsetRisk> {
    let mut out = SubsetRisk { name: subset.name.clone(), predicate: subset.predicate.clone(), row_count: None, risks: vec![] };
    if subset.predicate.columns().any(|c| !protected.has_column(c)) {
        return Ok(out);
    }
    let rows = subset.predicate.matching_rows(protected)?;
    out.row_count = Some(rows.len());
    if !rows.is_empty() {
        let (a, p) = (attacker.take_rows(&rows), protected.take_rows(&rows));
        out.risks = assess_all(&a, &p, &subset.scenarios, spec, perturbed)?;
    }
    Ok(out)
}

/// Stateful iterate-and-reassess loop: every applied step is followed by a
/// full reassessment. Shared by batch runs and interactive sessions.
#[derive(Debug, Clone)]
pub struct Workflow {
    config: WorkflowConfig,
    original: Dataset,
    protected: Dataset,
    attacker: Dataset,
    provenance: Provenance,
    perturbed: BTreeSet<String>,
    baseline: Snapshot,
    steps: Vec<StepReport>,
}

impl Workflow {
    pub fn new(original: Dataset, config: WorkflowConfig) -> Result<Self> {
        if config.scenarios.is_empty() {
            return Err(Error::InvalidScenario("at least one scenario is required".into()));
        }
        let perturbed = BTreeSet::new();
        let baseline = Self::snapshot(&config, &original, &original, &perturbed)?;
        Ok(Workflow {
            protected: original.clone(),
            attacker: original.clone(),
            original,
            config,
            provenance: Provenance::default(),
            perturbed,
            baseline,
            steps: vec![],
        })
    }

    fn snapshot(config: &WorkflowConfig, attacker: &Dataset, protected: &Dataset, perturbed: &BTreeSet<String>) -> Result<Snapshot> {
        let spec = &config.distance_spec;
        let subsets = config
            .subsets
            .iter()
            .map(|s| assess_subset(attacker, protected, s, spec, perturbed))
            .collect::<Result<_>>()?;
        Ok(Snapshot {
            row_count: protected.row_count(),
            scenarios: assess_all(attacker, protected, &config.scenarios, spec, perturbed)?,
            subsets,
        })
    }

    pub fn config(&self) -> &WorkflowConfig {
        &self.config
    }

    pub fn original(&self) -> &Dataset {
        &self.original
    }

    pub fn protected(&self) -> &Dataset {
        &self.protected
    }

    pub fn attacker_view(&self) -> &Dataset {
        &self.attacker
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn perturbed_columns(&self) -> &BTreeSet<String> {
        &self.perturbed
    }

    pub fn baseline(&self) -> &Snapshot {
        &self.baseline
    }

    pub fn steps(&self) -> &[StepReport] {
        &self.steps
    }

    /// Latest assessment: after the last step, or the baseline.
    pub fn current(&self) -> &Snapshot {
        self.steps.last().map(|s| &s.after).unwrap_or(&self.baseline)
    }

    /// Applies a step and reassesses. On error nothing changes.
    pub fn apply(&mut self, step: &TransformStep) -> Result<&StepReport> {
        let index = self.steps.len();
        let step = step.with_default_seed(step_seed(self.config.seed, index));
        let (applied, attacker) = advance(&self.protected, &self.attacker, &step)?;
        let mut perturbed = self.perturbed.clone();
        track_perturbation(&step, &mut perturbed);
        let after = Self::snapshot(&self.config, &attacker, &applied.dataset, &perturbed)?;
        let utility = compare(&self.protected, &applied.dataset, &step.touched_columns());
        let report = StepReport {
            index: index + 1,
            descriptor: step.to_string(),
            entry: applied.entry.clone(),
            rows_before: self.protected.row_count(),
            before: self.current().scenarios.clone(),
            after,
            utility,
        };
        self.protected = applied.dataset;
        self.attacker = attacker;
        self.perturbed = perturbed;
        self.provenance.entries.push(applied.entry);
        self.steps.push(report);
        Ok(self.steps.last().expect("just pushed"))
    }

    /// Reverts the last step by replaying the remaining provenance from the
    /// original. Returns the removed step, if any.
    pub fn undo(&mut self) -> Result<Option<StepReport>> {
        let Some(removed) = self.steps.pop() else {
            return Ok(None);
        };
        self.provenance.entries.pop();
        let mut protected = self.original.clone();
        let mut attacker = self.original.clone();
        let mut perturbed = BTreeSet::new();
        for step in self.provenance.steps() {
            let (applied, next) = advance(&protected, &attacker, step)?;
            protected = applied.dataset;
            attacker = next;
            track_perturbation(step, &mut perturbed);
        }
        self.protected = protected;
        self.attacker = attacker;
        self.perturbed = perturbed;
        Ok(Some(removed))
    }

    /// Assesses an arbitrary scenario against the current state.
    pub fn assess(&self, scenario: &Scenario) -> Result<Assessment> {
        assess_scenario(&self.attacker, &self.protected, scenario, &self.config.distance_spec, &self.perturbed)
            .map(|a| a.summary())
    }

    /// Assesses a scenario restricted to rows matching `predicate`.
    pub fn assess_subset(&self, predicate: &Predicate, scenario: &Scenario) -> Result<Assessment> {
        let rows = predicate.matching_rows(&self.protected)?;
        if rows.is_empty() {
            return Err(Error::EmptySubset);
        }
        let (a, p) = (self.attacker.take_rows(&rows), self.protected.take_rows(&rows));
        assess_scenario(&a, &p, scenario, &self.config.distance_spec, &self.perturbed).map(|a| a.summary())
    }
}
