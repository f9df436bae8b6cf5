//! Typed client for the deid HTTP service.

use deid_api::{
    AssessRequest, BinsQuery, CreateSession, DatasetInfo, PipelineRequest, PipelineResponse, ReportQuery, ScenarioQuery,
    SessionView, SubsetQuery, Table, TransformRequest, TransformResponse, UndoResponse, PREFIX,
};
use deid_core::pipeline::{PipelineSpec, Profile, ReportFormat, RunReport, StepReport, UtilityDiagnostic};
use deid_core::risk::{Assessment, RiskResult};
use deid_core::synth::SyntheticConfig;
use deid_core::table::Schema;
use deid_core::transform::TransformStep;
use reqwest::{Method, RequestBuilder, Response, StatusCode, Url};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("invalid server URL {0:?}")]
    BadUrl(String),
    #[error("server returned {status}: {message}")]
    Api { status: StatusCode, message: String },
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            ClientError::Transport(e) => e.status(),
            ClientError::BadUrl(_) => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    http: reqwest::Client,
    base: Url,
}

impl Client {
    /// `base` is the server root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: &str) -> Result<Self> {
        let url = Url::parse(base).map_err(|_| ClientError::BadUrl(base.to_string()))?;
        if !matches!(url.scheme(), "http" | "https") || url.cannot_be_a_base() {
            return Err(ClientError::BadUrl(base.to_string()));
        }
        Ok(Client { http: reqwest::Client::new(), base: url })
    }

    pub fn base(&self) -> &Url {
        &self.base
    }

    /// Request to `/v1/<segments...>`, each segment percent-encoded.
    fn request(&self, method: Method, segments: &[&str]) -> RequestBuilder {
        let mut url = self.base.clone();
        url.path_segments_mut()
            .expect("http URLs have paths")
            .pop_if_empty()
            .push(PREFIX.trim_start_matches('/'))
            .extend(segments);
        self.http.request(method, url)
    }

    async fn send(&self, req: RequestBuilder) -> Result<Response> {
        let resp = req.send().await?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().await.unwrap_or_default();
        let message = serde_json::from_str::<deid_api::ErrorBody>(&text).map(|b| b.error).unwrap_or(text);
        Err(ClientError::Api { status, message })
    }

    async fn json<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T> {
        Ok(self.send(req).await?.json().await?)
    }

    async fn text(&self, req: RequestBuilder) -> Result<String> {
        Ok(self.send(req).await?.text().await?)
    }

    fn post_json(&self, segments: &[&str], body: &impl Serialize) -> RequestBuilder {
        self.request(Method::POST, segments).json(body)
    }

    pub async fn health(&self) -> Result<()> {
        self.send(self.request(Method::GET, &["health"])).await.map(drop)
    }

    /// Uploads CSV text; kinds are inferred.
    pub async fn upload_csv(&self, csv: impl Into<String>) -> Result<DatasetInfo> {
        let req = self.request(Method::POST, &["datasets"]).header("content-type", "text/csv").body(csv.into());
        self.json(req).await
    }

    pub async fn upload(&self, table: &Table) -> Result<DatasetInfo> {
        self.json(self.post_json(&["datasets"], table)).await
    }

    pub async fn dataset_schema(&self, id: &str) -> Result<Schema> {
        self.json(self.request(Method::GET, &["datasets", id, "schema"])).await
    }

    pub async fn dataset_histogram(&self, id: &str, column: &str, bins: Option<usize>) -> Result<Profile> {
        let req = self.request(Method::GET, &["datasets", id, "columns", column, "histogram"]).query(&BinsQuery { bins });
        self.json(req).await
    }

    pub async fn create_session(&self, dataset_id: &str, spec: PipelineSpec) -> Result<SessionView> {
        let body = CreateSession { dataset_id: dataset_id.to_string(), spec };
        self.json(self.post_json(&["sessions"], &body)).await
    }

    pub async fn session(&self, id: &str) -> Result<SessionView> {
        self.json(self.request(Method::GET, &["sessions", id])).await
    }

    pub async fn apply_step(&self, id: &str, step: &TransformStep) -> Result<StepReport> {
        self.json(self.post_json(&["sessions", id, "steps"], step)).await
    }

    pub async fn undo(&self, id: &str) -> Result<UndoResponse> {
        self.json(self.request(Method::POST, &["sessions", id, "undo"])).await
    }

    pub async fn risk(&self, id: &str, scenario: &ScenarioQuery) -> Result<Assessment> {
        self.json(self.request(Method::GET, &["sessions", id, "risk"]).query(scenario)).await
    }

    pub async fn subset_risk(&self, id: &str, predicate: &str, scenario: ScenarioQuery) -> Result<Assessment> {
        let q = SubsetQuery::new(predicate, scenario);
        self.json(self.request(Method::GET, &["sessions", id, "subset-risk"]).query(&q)).await
    }

    /// The session report rendered server-side.
    pub async fn report_text(&self, id: &str, format: ReportFormat) -> Result<String> {
        let q = ReportQuery { format: Some(format) };
        self.text(self.request(Method::GET, &["sessions", id, "report"]).query(&q)).await
    }

    pub async fn report(&self, id: &str) -> Result<RunReport> {
        let q = ReportQuery { format: Some(ReportFormat::Json) };
        self.json(self.request(Method::GET, &["sessions", id, "report"]).query(&q)).await
    }

    pub async fn export(&self, id: &str) -> Result<String> {
        self.text(self.request(Method::GET, &["sessions", id, "export"])).await
    }

    pub async fn session_histogram(&self, id: &str, column: &str, bins: Option<usize>) -> Result<UtilityDiagnostic> {
        let req = self.request(Method::GET, &["sessions", id, "columns", column, "histogram"]).query(&BinsQuery { bins });
        self.json(req).await
    }

    pub async fn assess(&self, req: &AssessRequest) -> Result<RiskResult> {
        self.json(self.post_json(&["assess"], req)).await
    }

    pub async fn transform(&self, req: &TransformRequest) -> Result<TransformResponse> {
        self.json(self.post_json(&["transform"], req)).await
    }

    pub async fn pipeline(&self, req: &PipelineRequest) -> Result<PipelineResponse> {
        self.json(self.post_json(&["pipeline"], req)).await
    }

    /// Synthetic data as CSV.
    pub async fn synth(&self, config: &SyntheticConfig) -> Result<String> {
        self.text(self.post_json(&["synth"], config)).await
    }
}
