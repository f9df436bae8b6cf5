use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::decision::{Level, RiskBenefitMatrix, RiskCutoffs};
use crate::error::{Error, Result};
use crate::risk::{DistanceSpec, Scenario};
use crate::table::{AttributeClass, Predicate, Schema};
use crate::transform::TransformStep;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub max_risk_percent: f64,
    pub min_class_size: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { max_risk_percent: 20.0, min_class_size: 3 }
    }
}

/// Records an attacker is assumed to know belong to `predicate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSpec {
    pub name: String,
    pub predicate: Predicate,
    pub scenarios: Vec<Scenario>,
}

/// Steps to apply without assessment. A full pipeline spec also parses as
/// one; its other fields are ignored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    #[serde(default)]
    pub classification: BTreeMap<String, AttributeClass>,
    pub steps: Vec<TransformStep>,
    #[serde(default)]
    pub seed: u64,
}

/// Declarative de-identification run, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    /// Applied to the input before the baseline assessment.
    #[serde(default)]
    pub classification: BTreeMap<String, AttributeClass>,
    #[serde(default)]
    pub steps: Vec<TransformStep>,
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub subsets: Vec<SubsetSpec>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub distance_spec: DistanceSpec,
    #[serde(default = "default_benefit")]
    pub benefit_level: Level,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub risk_levels: RiskCutoffs,
    #[serde(default)]
    pub decision_matrix: RiskBenefitMatrix,
    /// Free-form context copied into the report, e.g. release setting.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

fn default_benefit() -> Level {
    Level::M
}

impl PipelineSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Checks configuration and that every scenario refers to attributes that
    /// exist in `schema` or are created by a step.
    pub fn validate(&self, schema: &Schema) -> Result<()> {
        self.validate_settings(schema)?;
        let mut known: BTreeSet<&str> = schema.names().collect();
        for step in &self.steps {
            if let TransformStep::DeriveDuration { new_name, .. } = step {
                known.insert(new_name);
            }
        }
        let all = self.scenarios.iter().chain(self.subsets.iter().flat_map(|s| &s.scenarios));
        for scenario in all {
            if let Some(q) = scenario.qis().iter().find(|q| !known.contains(q.as_str())) {
                return Err(Error::InvalidScenario(format!("{q} is neither an input column nor derived by a step")));
            }
        }
        Ok(())
    }

    /// Everything `validate` checks except that scenario attributes exist,
    /// for interactive use where later steps may still create them.
    pub fn validate_settings(&self, schema: &Schema) -> Result<()> {
        if self.thresholds.min_class_size < 1 {
            return Err(Error::InvalidParameter("min_class_size must be at least 1".into()));
        }
        if !(0.0..=100.0).contains(&self.thresholds.max_risk_percent) {
            return Err(Error::InvalidParameter("max_risk_percent must lie in [0, 100]".into()));
        }
        if self.scenarios.is_empty() {
            return Err(Error::InvalidScenario("at least one scenario is required".into()));
        }
        self.risk_levels.validate()?;
        self.decision_matrix.validate()?;
        for name in self.classification.keys() {
            schema.field(name)?;
        }
        for scenario in self.scenarios.iter().chain(self.subsets.iter().flat_map(|s| &s.scenarios)) {
            Scenario::new(scenario.qis().iter().cloned())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Field, ValueKind};

    #[test]
    fn minimal_json() {
        let spec = PipelineSpec::from_json(r#"{"scenarios": [["Age", "Gender"]]}"#).unwrap();
        assert_eq!(spec.thresholds.min_class_size, 3);
        assert_eq!(spec.benefit_level, Level::M);
        let schema = Schema::new(vec![Field::new("Age", ValueKind::Numeric), Field::new("Gender", ValueKind::Categorical)])
            .unwrap();
        spec.validate(&schema).unwrap();
    }

    #[test]
    fn derived_columns_count_as_known() {
        let schema = Schema::new(vec![Field::new("A", ValueKind::Date), Field::new("B", ValueKind::Date)]).unwrap();
        let mut spec = PipelineSpec::from_json(r#"{"scenarios": [["Days"]]}"#).unwrap();
        assert!(spec.validate(&schema).is_err());
        spec.steps.push(TransformStep::DeriveDuration {
            start: "A".into(),
            end: "B".into(),
            new_name: "Days".into(),
            drop_sources: true,
            class: None,
        });
        spec.validate(&schema).unwrap();
        spec.thresholds.min_class_size = 0;
        assert!(spec.validate(&schema).is_err());
    }
}
