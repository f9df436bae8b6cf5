use axum::body::Bytes;
use axum::extract::{FromRequest, FromRequestParts, Path, Query, Request, State};
use axum::http::request::Parts;
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use deid_api::{
    AssessRequest, BinsQuery, CreateSession, DatasetInfo, PipelineRequest, PipelineResponse, ReportQuery, ScenarioQuery,
    SessionView, SubsetQuery, Table, TransformRequest, TransformResponse, UndoResponse,
};
use deid_core::pipeline::{profile, render_report, ReportFormat, RunReport, StepReport, UtilityDiagnostic, Profile};
use deid_core::risk::{Assessment, RiskResult};
use deid_core::synth::SyntheticConfig;
use deid_core::table::{to_csv_string, Predicate, Schema};
use deid_core::transform::TransformStep;
use serde::de::DeserializeOwned;

use crate::error::{ApiError, ApiResult};
use crate::state::{AppState, Session};

/// JSON body whose rejections map to the API's error responses.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let Json(value) = Json::<T>::from_request(req, state).await?;
        Ok(Body(value))
    }
}

pub struct Params<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned + Send> FromRequestParts<S> for Params<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        let Query(value) = Query::<T>::from_request_parts(parts, state).await?;
        Ok(Params(value))
    }
}

pub struct Ids<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned + Send> FromRequestParts<S> for Ids<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        let Path(value) = Path::<T>::from_request_parts(parts, state).await?;
        Ok(Ids(value))
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::Internal(e.to_string()))?
}

fn typed(content_type: &'static str, body: String) -> Response {
    ([(header::CONTENT_TYPE, content_type)], body).into_response()
}

pub async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({"status": "ok"}))
}

pub async fn not_found() -> ApiError {
    ApiError::NotFound("no such endpoint".into())
}

/// Accepts `text/csv` with an inferred schema, or a JSON `Table`.
pub async fn upload_dataset(
    State(app): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<DatasetInfo>)> {
    let content_type = headers.get(header::CONTENT_TYPE).and_then(|v| v.to_str().ok()).unwrap_or_default();
    let mime = content_type.split(';').next().unwrap_or_default().trim();
    let table = match mime {
        "text/csv" => Table::new(String::from_utf8(body.to_vec()).map_err(|e| ApiError::BadRequest(e.to_string()))?),
        "application/json" => serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(e.to_string()))?,
        other => return Err(ApiError::UnsupportedMediaType(format!("expected text/csv or application/json, got {other:?}"))),
    };
    let info = blocking(move || {
        let ds = table.load()?;
        app.add_dataset(ds)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(info)))
}

pub async fn dataset_schema(State(app): State<AppState>, Ids(id): Ids<String>) -> ApiResult<Json<Schema>> {
    Ok(Json(app.dataset(&id)?.schema().clone()))
}

pub async fn dataset_histogram(
    State(app): State<AppState>,
    Ids((id, column)): Ids<(String, String)>,
    Params(q): Params<BinsQuery>,
) -> ApiResult<Json<Profile>> {
    let ds = app.dataset(&id)?;
    blocking(move || Ok(Json(profile(&ds, &column, q.bins())?))).await
}

pub async fn create_session(
    State(app): State<AppState>,
    Body(req): Body<CreateSession>,
) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let ds = app.dataset(&req.dataset_id)?;
    let view = blocking(move || {
        let session = Session::open(req.dataset_id, &ds, req.spec)?;
        let (id, _) = app.add_session(session)?;
        let shared = app.session(&id)?;
        let view = shared.blocking_read().view(&id);
        Ok(view)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(view)))
}

pub async fn get_session(State(app): State<AppState>, Ids(id): Ids<String>) -> ApiResult<Json<SessionView>> {
    let session = app.session(&id)?.read_owned().await;
    blocking(move || Ok(Json(session.view(&id)))).await
}

/// Applies one step and returns its report with the reassessed matrix.
pub async fn apply_step(
    State(app): State<AppState>,
    Ids(id): Ids<String>,
    Body(step): Body<TransformStep>,
) -> ApiResult<Json<StepReport>> {
    let mut session = app.session(&id)?.write_owned().await;
    blocking(move || {
        let report = session.workflow.apply(&step)?.clone();
        app.persist(&id, &session)?;
        Ok(Json(report))
    })
    .await
}

pub async fn undo(State(app): State<AppState>, Ids(id): Ids<String>) -> ApiResult<Json<UndoResponse>> {
    let mut session = app.session(&id)?.write_owned().await;
    blocking(move || {
        let removed = session.workflow.undo()?;
        app.persist(&id, &session)?;
        Ok(Json(UndoResponse { removed, current: session.workflow.current().clone() }))
    })
    .await
}

pub async fn risk(
    State(app): State<AppState>,
    Ids(id): Ids<String>,
    Params(q): Params<ScenarioQuery>,
) -> ApiResult<Json<Assessment>> {
    let session = app.session(&id)?.read_owned().await;
    blocking(move || {
        let scenario = q.resolve(&session.spec.scenarios)?;
        Ok(Json(session.workflow.assess(&scenario)?))
    })
    .await
}

pub async fn subset_risk(
    State(app): State<AppState>,
    Ids(id): Ids<String>,
    Params(q): Params<SubsetQuery>,
) -> ApiResult<Json<Assessment>> {
    let session = app.session(&id)?.read_owned().await;
    blocking(move || {
        let predicate: Predicate = q.predicate.parse()?;
        let scenario = q.scenario().resolve(&session.spec.scenarios)?;
        Ok(Json(session.workflow.assess_subset(&predicate, &scenario)?))
    })
    .await
}

pub async fn report(
    State(app): State<AppState>,
    Ids(id): Ids<String>,
    Params(q): Params<ReportQuery>,
) -> ApiResult<Response> {
    let session = app.session(&id)?.read_owned().await;
    blocking(move || {
        let report = RunReport::from_workflow(&session.workflow, &session.settings())?;
        Ok(match q.format.unwrap_or(ReportFormat::Json) {
            ReportFormat::Json => typed("application/json", render_report(&report, ReportFormat::Json)),
            ReportFormat::Markdown => typed("text/markdown; charset=utf-8", render_report(&report, ReportFormat::Markdown)),
        })
    })
    .await
}

pub async fn export(State(app): State<AppState>, Ids(id): Ids<String>) -> ApiResult<Response> {
    let session = app.session(&id)?.read_owned().await;
    blocking(move || Ok(typed("text/csv; charset=utf-8", to_csv_string(session.workflow.protected())))).await
}

/// Distribution of a column in the original data and in the current state.
pub async fn session_histogram(
    State(app): State<AppState>,
    Ids((id, column)): Ids<(String, String)>,
    Params(q): Params<BinsQuery>,
) -> ApiResult<Json<UtilityDiagnostic>> {
    let session = app.session(&id)?.read_owned().await;
    blocking(move || {
        let wf = &session.workflow;
        let before = profile(wf.original(), &column, q.bins());
        let after = profile(wf.protected(), &column, q.bins());
        if let (Err(_), Err(e)) = (&before, &after) {
            return Err(ApiError::Core(deid_core::Error::UnknownColumn(format!("{column} ({e})"))));
        }
        Ok(Json(UtilityDiagnostic { column, before: before.ok(), after: after.ok() }))
    })
    .await
}

pub async fn assess(Body(req): Body<AssessRequest>) -> ApiResult<Json<RiskResult>> {
    blocking(move || Ok(Json(deid_api::assess(&req)?))).await
}

pub async fn transform(Body(req): Body<TransformRequest>) -> ApiResult<Json<TransformResponse>> {
    blocking(move || Ok(Json(deid_api::transform(&req)?))).await
}

pub async fn pipeline(Body(req): Body<PipelineRequest>) -> ApiResult<Json<PipelineResponse>> {
    blocking(move || Ok(Json(deid_api::run_pipeline(&req)?))).await
}

pub async fn synth(Body(config): Body<SyntheticConfig>) -> ApiResult<Response> {
    blocking(move || Ok(typed("text/csv; charset=utf-8", deid_api::synthesize(&config)?))).await
}
