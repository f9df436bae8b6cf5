//! Declarative iterate-and-reassess runs: apply steps in order, reassess
//! every scenario after each one, and check the result against thresholds.

mod decision;
mod report;
mod spec;
mod utility;
mod workflow;

pub use decision::{decide, risk_to_level, Decision, Level, LevelRange, RiskBenefitMatrix, RiskCutoffs};
pub use report::{render_report, verdict, Abort, ReportFormat, ReportSettings, RunReport, ScenarioVerdict, Verdict};
pub use spec::{PipelineSpec, SubsetSpec, Thresholds, TransformSpec};
pub use utility::{compare, frequencies, histogram, profile, Bin, Profile, UtilityDiagnostic, DEFAULT_BINS};
pub use workflow::{step_seed, ScenarioRisk, Snapshot, StepReport, SubsetRisk, Workflow, WorkflowConfig};

use crate::error::Error;
use crate::table::Dataset;
use crate::transform::{apply, Provenance};

/// A failed run. `report` holds everything completed before the failure;
/// it is absent when the spec itself was rejected.
#[derive(Debug, thiserror::Error)]
#[error("{source}")]
pub struct PipelineError {
    pub source: Error,
    pub report: Option<Box<RunReport>>,
}

impl From<Error> for PipelineError {
    fn from(source: Error) -> Self {
        PipelineError { source, report: None }
    }
}

impl From<&PipelineSpec> for WorkflowConfig {
    fn from(spec: &PipelineSpec) -> Self {
        WorkflowConfig {
            scenarios: spec.scenarios.clone(),
            subsets: spec.subsets.clone(),
            distance_spec: spec.distance_spec.clone(),
            seed: spec.seed,
        }
    }
}

/// Runs `spec` on `ds`. Inputs are not modified; identical inputs give
/// identical outputs.
pub fn run(ds: &Dataset, spec: &PipelineSpec) -> Result<(Dataset, RunReport), PipelineError> {
    spec.validate(ds.schema())?;
    let settings = ReportSettings::from(spec);
    let original = ds.classify(&spec.classification)?;
    let mut wf = Workflow::new(original, WorkflowConfig::from(spec))?;
    for (i, step) in spec.steps.iter().enumerate() {
        if let Err(source) = wf.apply(step) {
            let mut report = RunReport::from_workflow(&wf, &settings)?;
            report.verdict = None;
            report.aborted = Some(Abort { index: i + 1, step: step.clone(), error: source.to_string() });
            return Err(PipelineError { source, report: Some(Box::new(report)) });
        }
    }
    let report = RunReport::from_workflow(&wf, &settings)?;
    Ok((wf.protected().clone(), report))
}

/// Applies the steps of `spec` without assessment. Noise seeds are derived
/// exactly as in `run`, so both produce the same data.
pub fn transform(ds: &Dataset, spec: &TransformSpec) -> Result<(Dataset, Provenance), Error> {
    let mut current = ds.classify(&spec.classification)?;
    let mut provenance = Provenance::default();
    for (i, step) in spec.steps.iter().enumerate() {
        let applied = apply(&current, &step.with_default_seed(step_seed(spec.seed, i)))?;
        current = applied.dataset;
        provenance.entries.push(applied.entry);
    }
    Ok((current, provenance))
}
