use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::decision::{decide, risk_to_level, Decision, Level, RiskBenefitMatrix, RiskCutoffs};
use super::utility::{Profile, UtilityDiagnostic};
use super::workflow::{ScenarioRisk, Snapshot, StepReport, SubsetRisk, Workflow};
use super::{PipelineSpec, Thresholds};
use crate::error::Result;
use crate::risk::{Assessment, Metric, Scenario};
use crate::transform::TransformStep;

/// Everything the final verdict depends on besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub thresholds: Thresholds,
    pub benefit_level: Level,
    pub risk_levels: RiskCutoffs,
    pub decision_matrix: RiskBenefitMatrix,
    pub seed: u64,
    pub metadata: BTreeMap<String, String>,
}

impl Default for ReportSettings {
    fn default() -> Self {
        ReportSettings {
            thresholds: Thresholds::default(),
            benefit_level: Level::M,
            risk_levels: RiskCutoffs::default(),
            decision_matrix: RiskBenefitMatrix::default(),
            seed: 0,
            metadata: BTreeMap::new(),
        }
    }
}

impl From<&PipelineSpec> for ReportSettings {
    fn from(spec: &PipelineSpec) -> Self {
        ReportSettings {
            thresholds: spec.thresholds.clone(),
            benefit_level: spec.benefit_level,
            risk_levels: spec.risk_levels.clone(),
            decision_matrix: spec.decision_matrix.clone(),
            seed: spec.seed,
            metadata: spec.metadata.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioVerdict {
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk_percent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_k: Option<usize>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub scenarios: Vec<ScenarioVerdict>,
    pub passed: bool,
    /// Smallest class size over k-anonymity scenarios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_k: Option<usize>,
    /// Highest risk over assessed scenarios; drives the risk level.
    pub max_risk_percent: f64,
    pub risk_level: Level,
    pub benefit_level: Level,
    pub decision: Decision,
}

/// A scenario passes when its risk is at most `max_risk_percent` and, under
/// k-anonymity, its smallest class has at least `min_class_size` records.
/// Unassessable scenarios fail.
pub fn verdict(snapshot: &Snapshot, settings: &ReportSettings) -> Result<Verdict> {
    let t = &settings.thresholds;
    let scenarios: Vec<ScenarioVerdict> = snapshot
        .scenarios
        .iter()
        .map(|s| match &s.assessment {
            None => ScenarioVerdict {
                scenario: s.scenario.clone(),
                metric: None,
                risk_percent: None,
                min_k: None,
                passed: false,
                reason: Some(format!("missing columns: {}", s.missing_columns.join(", "))),
            },
            Some(a) => {
                let risk = a.risk_percent();
                let mut reasons = vec![];
                if risk > t.max_risk_percent {
                    reasons.push(format!("risk {risk:.2}% above {}%", t.max_risk_percent));
                }
                if let Some(k) = a.min_k().filter(|k| *k < t.min_class_size) {
                    reasons.push(format!("min k {k} below {}", t.min_class_size));
                }
                ScenarioVerdict {
                    scenario: s.scenario.clone(),
                    metric: Some(a.metric()),
                    risk_percent: Some(risk),
                    min_k: a.min_k(),
                    passed: reasons.is_empty(),
                    reason: (!reasons.is_empty()).then(|| reasons.join("; ")),
                }
            }
        })
        .collect();
    let assessed: Vec<f64> = scenarios.iter().filter_map(|s| s.risk_percent).collect();
    let max_risk_percent = if assessed.len() < scenarios.len() {
        100.0
    } else {
        assessed.iter().copied().fold(0.0, f64::max)
    };
    let risk_level = risk_to_level(max_risk_percent, &settings.risk_levels)?;
    Ok(Verdict {
        passed: scenarios.iter().all(|s| s.passed),
        min_k: scenarios.iter().filter_map(|s| s.min_k).min(),
        max_risk_percent,
        risk_level,
        benefit_level: settings.benefit_level,
        decision: decide(&settings.decision_matrix, risk_level, settings.benefit_level)?,
        scenarios,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Abort {
    /// 1-based position of the failing step.
    pub index: usize,
    pub step: TransformStep,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub settings: ReportSettings,
    pub input_rows: usize,
    pub baseline: Snapshot,
    pub steps: Vec<StepReport>,
    #[serde(rename = "final", default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<Abort>,
}

impl RunReport {
    pub fn from_workflow(wf: &Workflow, settings: &ReportSettings) -> Result<RunReport> {
        Ok(RunReport {
            settings: settings.clone(),
            input_rows: wf.original().row_count(),
            baseline: wf.baseline().clone(),
            steps: wf.steps().to_vec(),
            verdict: Some(verdict(wf.current(), settings)?),
            aborted: None,
        })
    }

    pub fn passed(&self) -> bool {
        self.aborted.is_none() && self.verdict.as_ref().is_some_and(|v| v.passed)
    }

    /// Risk matrix after the last completed step.
    pub fn final_snapshot(&self) -> &Snapshot {
        self.steps.last().map(|s| &s.after).unwrap_or(&self.baseline)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(crate::error::Error::InvalidParameter(format!("unknown report format {other:?}"))),
        }
    }
}

pub fn render_report(report: &RunReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Markdown => render_markdown(report),
    }
}

fn metric_name(m: Metric) -> &'static str {
    match m {
        Metric::KAnonymity => "k-anonymity",
        Metric::RecordLinkage => "Record linkage",
    }
}

fn pct(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.2}")).unwrap_or_else(|| "n/a".into())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "-".into())
}

/// Attributes of `scenarios` in first-appearance order.
fn qi_columns<'a>(scenarios: impl IntoIterator<Item = &'a Scenario>) -> Vec<&'a str> {
    let mut out: Vec<&str> = vec![];
    for s in scenarios {
        for q in s.qis() {
            if !out.contains(&q.as_str()) {
                out.push(q);
            }
        }
    }
    out
}

fn header(out: &mut String, cols: &[&str]) {
    let _ = writeln!(out, "| {} |", cols.join(" | "));
    let _ = writeln!(out, "|{}", cols.iter().map(|_| "---|").collect::<String>());
}

fn row(out: &mut String, cells: &[String]) {
    let _ = writeln!(out, "| {} |", cells.join(" | "));
}

fn ticks(qis: &[&str], scenario: &Scenario) -> Vec<String> {
    qis.iter().map(|q| if scenario.contains(q) { "✓".to_string() } else { String::new() }).collect()
}

fn matrix_table(out: &mut String, risks: &[ScenarioRisk]) {
    let qis = qi_columns(risks.iter().map(|r| &r.scenario));
    let mut cols = qis.clone();
    cols.extend(["Metric", "Risk (%)", "min k"]);
    header(out, &cols);
    for r in risks {
        let mut cells = ticks(&qis, &r.scenario);
        cells.push(r.assessment.as_ref().map(|a| metric_name(a.metric())).unwrap_or("n/a").into());
        cells.push(pct(r.risk_percent()));
        cells.push(opt(r.assessment.as_ref().and_then(Assessment::min_k)));
        row(out, &cells);
    }
    out.push('\n');
}

fn before_after_table(out: &mut String, before: &[ScenarioRisk], after: &[ScenarioRisk]) {
    let qis = qi_columns(after.iter().map(|r| &r.scenario));
    let mut cols = qis.clone();
    cols.extend(["Metric", "Before (%)", "After (%)", "min k"]);
    header(out, &cols);
    for (b, a) in before.iter().zip(after) {
        let mut cells = ticks(&qis, &a.scenario);
        cells.push(a.assessment.as_ref().map(|x| metric_name(x.metric())).unwrap_or("n/a").into());
        cells.push(pct(b.risk_percent()));
        cells.push(pct(a.risk_percent()));
        cells.push(opt(a.assessment.as_ref().and_then(Assessment::min_k)));
        row(out, &cells);
    }
    out.push('\n');
}

fn scenario_details(out: &mut String, risks: &[ScenarioRisk]) {
    for r in risks {
        let _ = writeln!(out, "#### Scenario: {}\n", r.scenario);
        match &r.assessment {
            None => {
                let _ = writeln!(out, "Not assessed: missing columns {}.\n", r.missing_columns.join(", "));
            }
            Some(Assessment::KAnonymity(k)) => {
                header(out, &["Metric", "Records", "Unique (k=1)", "Risk (%)", "min k"]);
                row(out, &[
                    metric_name(Metric::KAnonymity).into(),
                    k.row_count.to_string(),
                    k.unique_count.to_string(),
                    pct(Some(k.risk_percent)),
                    k.min_k.to_string(),
                ]);
                let hist: Vec<String> = k.k_histogram.iter().map(|(k, n)| format!("k={k}: {n}")).collect();
                let _ = writeln!(out, "\nClasses by size: {}\n", hist.join(", "));
            }
            Some(Assessment::RecordLinkage(l)) => {
                header(out, &["Metric", "Records", "Correct", "False", "Ambiguous", "Risk (%)", "Margin of error"]);
                row(out, &[
                    metric_name(Metric::RecordLinkage).into(),
                    l.record_count.to_string(),
                    l.correct_count.to_string(),
                    l.false_count.to_string(),
                    l.ambiguous_count.to_string(),
                    pct(Some(l.total_match_percent)),
                    l.margin_of_error.map(|m| format!("{m:.4}")).unwrap_or_else(|| "-".into()),
                ]);
                out.push('\n');
            }
        }
    }
}

fn subset_table(out: &mut String, subsets: &[SubsetRisk]) {
    if subsets.is_empty() {
        return;
    }
    let qis = qi_columns(subsets.iter().flat_map(|s| s.risks.iter().map(|r| &r.scenario)));
    let mut cols = vec!["Subset", "Nr observations"];
    cols.extend(qis.iter());
    cols.extend(["Metric", "Risk (%)"]);
    header(out, &cols);
    for s in subsets {
        let count = opt(s.row_count);
        if s.risks.is_empty() {
            let mut cells = vec![s.name.clone(), count.clone()];
            cells.extend(qis.iter().map(|_| String::new()));
            cells.extend(["n/a".to_string(), "n/a".to_string()]);
            row(out, &cells);
        }
        for r in &s.risks {
            let mut cells = vec![s.name.clone(), count.clone()];
            cells.extend(ticks(&qis, &r.scenario));
            cells.push(r.assessment.as_ref().map(|a| metric_name(a.metric())).unwrap_or("n/a").into());
            cells.push(pct(r.risk_percent()));
            row(out, &cells);
        }
    }
    out.push('\n');
}

fn profile_table(out: &mut String, title: &str, profile: &Profile) {
    let _ = writeln!(out, "{title}:\n");
    header(out, &["Value", "Count"]);
    match profile {
        Profile::Histogram { bins, .. } => {
            for b in bins {
                row(out, &[b.label.clone(), b.count.to_string()]);
            }
        }
        Profile::Frequencies { counts, .. } => {
            for (v, c) in counts {
                row(out, &[v.clone(), c.to_string()]);
            }
        }
    }
    if profile.missing() > 0 {
        row(out, &["(missing)".into(), profile.missing().to_string()]);
    }
    out.push('\n');
}

fn utility_section(out: &mut String, diagnostics: &[UtilityDiagnostic]) {
    for d in diagnostics {
        let _ = writeln!(out, "#### Utility: {}\n", d.column);
        if let Some(b) = &d.before {
            profile_table(out, "Before", b);
        }
        if let Some(a) = &d.after {
            profile_table(out, "After", a);
        }
    }
}

fn render_markdown(report: &RunReport) -> String {
    let mut out = String::new();
    let s = &report.settings;
    out.push_str("# De-identification report\n\n");
    let _ = writeln!(out, "- Input records: {}", report.input_rows);
    let _ = writeln!(out, "- Seed: {}", s.seed);
    let _ = writeln!(out, "- Maximum risk: {}%", s.thresholds.max_risk_percent);
    let _ = writeln!(out, "- Minimum class size: {}", s.thresholds.min_class_size);
    let _ = writeln!(out, "- Benefit level: {}", s.benefit_level);
    for (k, v) in &s.metadata {
        let _ = writeln!(out, "- {k}: {v}");
    }
    out.push('\n');

    out.push_str("## Baseline\n\n");
    let _ = writeln!(out, "Records: {}\n", report.baseline.row_count);
    matrix_table(&mut out, &report.baseline.scenarios);
    subset_table(&mut out, &report.baseline.subsets);
    scenario_details(&mut out, &report.baseline.scenarios);

    for step in &report.steps {
        let _ = writeln!(out, "## Step {}: {}\n", step.index, step.descriptor);
        let _ = writeln!(out, "- Kind: {:?}", step.entry.kind);
        let _ = writeln!(out, "- Records: {} -> {}", step.rows_before, step.after.row_count);
        let _ = writeln!(out, "- Affected rows: {}, affected cells: {}", step.entry.affected_rows, step.entry.affected_cells);
        if let Some(note) = &step.entry.note {
            let _ = writeln!(out, "- Note: {note}");
        }
        out.push('\n');
        before_after_table(&mut out, &step.before, &step.after.scenarios);
        subset_table(&mut out, &step.after.subsets);
        scenario_details(&mut out, &step.after.scenarios);
        utility_section(&mut out, &step.utility);
    }

    if let Some(a) = &report.aborted {
        let _ = writeln!(out, "## Aborted at step {}: {}\n", a.index, a.step);
        let _ = writeln!(out, "{}\n", a.error);
    }
    if let Some(v) = &report.verdict {
        out.push_str("## Final assessment\n\n");
        let qis = qi_columns(v.scenarios.iter().map(|s| &s.scenario));
        let mut cols = qis.clone();
        cols.extend(["Metric", "Risk (%)", "min k", "Result"]);
        header(&mut out, &cols);
        for sv in &v.scenarios {
            let mut cells = ticks(&qis, &sv.scenario);
            cells.push(sv.metric.map(metric_name).unwrap_or("n/a").into());
            cells.push(pct(sv.risk_percent));
            cells.push(opt(sv.min_k));
            cells.push(match (&sv.reason, sv.passed) {
                (_, true) => "pass".into(),
                (Some(r), false) => format!("fail ({r})"),
                (None, false) => "fail".into(),
            });
            row(&mut out, &cells);
        }
        out.push('\n');
        let _ = writeln!(out, "- Thresholds: {}", if v.passed { "PASS" } else { "FAIL" });
        let _ = writeln!(out, "- Smallest class: {}", opt(v.min_k));
        let _ = writeln!(out, "- Highest risk: {:.2}% (level {})", v.max_risk_percent, v.risk_level);
        let _ = writeln!(out, "- Benefit: {}", v.benefit_level);
        let _ = writeln!(out, "- Decision: {}", v.decision);
    }
    out
}
