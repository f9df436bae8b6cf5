//! Request and response bodies of the HTTP API, and the stateless
//! operations behind them. The service and the CLI both call these, so a
//! local run and a remote one compute the same values.

use std::collections::{BTreeMap, BTreeSet};

use deid_core::pipeline::{self, PipelineSpec, RunReport, Snapshot, StepReport, TransformSpec};
use deid_core::risk::{k_anonymity_risk, subset_risk, RiskResult, Scenario};
use deid_core::synth::{generate, SyntheticConfig};
use deid_core::table::{load_csv, to_csv_string, AttributeClass, Dataset, Predicate, Schema};
use deid_core::transform::Provenance;
use deid_core::{Error, Result};
use serde::{Deserialize, Serialize};

pub const PREFIX: &str = "/v1";

/// Error body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

/// A CSV table with an optional explicit schema and class assignments.
/// Without a schema, kinds are inferred from the values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub csv: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<Schema>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub classification: BTreeMap<String, AttributeClass>,
}

impl Table {
    pub fn new(csv: impl Into<String>) -> Self {
        Table { csv: csv.into(), ..Table::default() }
    }

    pub fn with_schema(mut self, schema: Option<Schema>) -> Self {
        self.schema = schema;
        self
    }

    pub fn load(&self) -> Result<Dataset> {
        let schema = self.schema.as_ref().map(|s| Schema::new(s.fields().to_vec())).transpose()?;
        load_csv(self.csv.as_bytes(), schema.as_ref())?.classify(&self.classification)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub id: String,
    pub row_count: usize,
    pub schema: Schema,
}

/// Opens a session on an uploaded dataset. Steps listed in the spec are
/// applied right away.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub dataset_id: String,
    #[serde(flatten)]
    pub spec: PipelineSpec,
}

/// Everything needed to redraw a session: configuration, the report of
/// every applied step and the current state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub dataset_id: String,
    /// The session configuration; `steps` lists the applied steps with
    /// their effective seeds.
    pub spec: PipelineSpec,
    pub schema: Schema,
    pub row_count: usize,
    pub perturbed_columns: BTreeSet<String>,
    pub baseline: Snapshot,
    pub steps: Vec<StepReport>,
    pub current: Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UndoResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub removed: Option<StepReport>,
    pub current: Snapshot,
}

/// Selects a scenario of a session: by position in its scenario list, or
/// as an explicit comma-separated attribute list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioQuery {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qis: Option<String>,
}

impl ScenarioQuery {
    pub fn index(i: usize) -> Self {
        ScenarioQuery { scenario: Some(i), qis: None }
    }

    pub fn attributes<S: AsRef<str>>(qis: &[S]) -> Self {
        let joined = qis.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(",");
        ScenarioQuery { scenario: None, qis: Some(joined) }
    }

    pub fn resolve(&self, scenarios: &[Scenario]) -> Result<Scenario> {
        match (self.scenario, &self.qis) {
            (Some(i), None) => scenarios
                .get(i)
                .cloned()
                .ok_or_else(|| Error::InvalidScenario(format!("no scenario at index {i}; {} defined", scenarios.len()))),
            (None, Some(qis)) => parse_qis(qis),
            _ => Err(Error::InvalidScenario("give exactly one of `scenario` or `qis`".into())),
        }
    }
}

/// A predicate `col:op:value,...` and a scenario chosen as in
/// `ScenarioQuery`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SubsetQuery {
    pub predicate: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qis: Option<String>,
}

impl SubsetQuery {
    pub fn new(predicate: impl Into<String>, scenario: ScenarioQuery) -> Self {
        SubsetQuery { predicate: predicate.into(), scenario: scenario.scenario, qis: scenario.qis }
    }

    pub fn scenario(&self) -> ScenarioQuery {
        ScenarioQuery { scenario: self.scenario, qis: self.qis.clone() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinsQuery {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
}

impl BinsQuery {
    pub fn bins(&self) -> usize {
        self.bins.unwrap_or(pipeline::DEFAULT_BINS)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportQuery {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<pipeline::ReportFormat>,
}

/// Parses `Age,Gender` into a scenario.
pub fn parse_qis(qis: &str) -> Result<Scenario> {
    Scenario::new(qis.split(',').map(str::trim).filter(|q| !q.is_empty()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessRequest {
    pub data: Table,
    pub qis: Vec<String>,
    /// Conjunctive filter `col:op:value,...`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<String>,
}

/// Singling-out risk of `qis`, within the subset when one is given. The
/// listed attributes are treated as quasi-identifiers.
pub fn assess(req: &AssessRequest) -> Result<RiskResult> {
    let qis = req.qis.iter().map(|q| (q.clone(), AttributeClass::QuasiIdentifier)).collect();
    let ds = req.data.load()?.classify(&qis)?;
    let scenario = Scenario::new(req.qis.iter().cloned())?;
    match &req.subset {
        Some(expr) => subset_risk(&ds, &expr.parse::<Predicate>()?, &scenario),
        None => k_anonymity_risk(&ds, &scenario),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRequest {
    pub data: Table,
    pub spec: TransformSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformResponse {
    pub csv: String,
    pub schema: Schema,
    pub provenance: Provenance,
}

pub fn transform(req: &TransformRequest) -> Result<TransformResponse> {
    let (out, provenance) = pipeline::transform(&req.data.load()?, &req.spec)?;
    Ok(TransformResponse { csv: to_csv_string(&out), schema: out.schema().clone(), provenance })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRequest {
    pub data: Table,
    pub spec: PipelineSpec,
}

/// A finished or aborted run. `csv` is the protected data, absent when a
/// step failed; `report.aborted` then says which.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResponse {
    pub report: RunReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

/// Errors only when the input or spec is rejected before any step runs.
pub fn run_pipeline(req: &PipelineRequest) -> Result<PipelineResponse> {
    match pipeline::run(&req.data.load()?, &req.spec) {
        Ok((out, report)) => Ok(PipelineResponse { report, csv: Some(to_csv_string(&out)) }),
        Err(pipeline::PipelineError { report: Some(report), .. }) => Ok(PipelineResponse { report: *report, csv: None }),
        Err(e) => Err(e.source),
    }
}

pub fn synthesize(config: &SyntheticConfig) -> Result<String> {
    Ok(to_csv_string(&generate(config)?))
}
