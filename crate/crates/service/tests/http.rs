use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use deid_api::{DatasetInfo, PipelineRequest, PipelineResponse, SessionView, Table, UndoResponse};
use deid_core::pipeline::{run, PipelineSpec, Profile, RunReport, StepReport, TransformSpec, UtilityDiagnostic};
use deid_core::risk::{k_anonymity_risk, Assessment, Scenario};
use deid_core::table::{load_csv, to_csv_string, AttributeClass};
use deid_core::transform::TransformStep;
use deid_service::{router, AppState};
use http_body_util::BodyExt;
use serde::de::DeserializeOwned;
use serde_json::json;
use tower::ServiceExt;

const CSV: &str = "\
Id,Age,Gender,Test,Outcome
1,34,F,2020/04/01 10:11:12,H
2,36,F,2020/04/01 11:00:00,H
3,37,F,2020/04/02 09:30:00,H
4,61,M,2020/04/03 12:00:00,D
5,62,M,2020/04/05 08:00:00,D
6,64,M,2020/04/05 17:45:00,D
7,80,F,2020/04/07 10:00:00,N
8,81,F,2020/04/08 10:00:00,H
9,83,F,2020/04/09 10:00:00,H
";

async fn call(app: &Router, method: Method, uri: &str, content_type: Option<&str>, body: String) -> (StatusCode, String) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(ct) = content_type {
        req = req.header("content-type", ct);
    }
    let resp = app.clone().oneshot(req.body(Body::from(body)).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, String) {
    call(app, Method::GET, uri, None, String::new()).await
}

async fn post_json(app: &Router, uri: &str, body: serde_json::Value) -> (StatusCode, String) {
    call(app, Method::POST, uri, Some("application/json"), body.to_string()).await
}

fn parse<T: DeserializeOwned>((status, body): (StatusCode, String)) -> T {
    assert!(status.is_success(), "{status}: {body}");
    serde_json::from_str(&body).unwrap_or_else(|e| panic!("{e}: {body}"))
}

fn classification() -> serde_json::Value {
    json!({"Id": "DirectIdentifier", "Age": "QuasiIdentifier", "Gender": "QuasiIdentifier",
           "Test": "QuasiIdentifier", "Outcome": "QuasiIdentifier"})
}

async fn upload(app: &Router) -> DatasetInfo {
    let (status, body) = call(app, Method::POST, "/v1/datasets", Some("text/csv"), CSV.into()).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    serde_json::from_str(&body).unwrap()
}

async fn open_session(app: &Router) -> SessionView {
    let dataset = upload(app).await;
    let (status, body) = post_json(
        app,
        "/v1/sessions",
        json!({"dataset_id": dataset.id, "classification": classification(), "seed": 9,
               "scenarios": [["Age", "Gender"], ["Age", "Test", "Gender"]]}),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    serde_json::from_str(&body).unwrap()
}

fn truncate() -> serde_json::Value {
    json!({"variant": "TruncateDateTime", "column": "Test"})
}

#[tokio::test]
async fn dataset_upload_and_schema() {
    let app = router(AppState::new());
    let info = upload(&app).await;
    assert_eq!(info.row_count, 9);
    let schema: deid_core::table::Schema = parse(get(&app, &format!("/v1/datasets/{}/schema", info.id)).await);
    assert_eq!(schema, info.schema);
    let hist: Profile = parse(get(&app, &format!("/v1/datasets/{}/columns/Age/histogram?bins=4", info.id)).await);
    assert_eq!(hist.total(), 9);
    let freq: Profile = parse(get(&app, &format!("/v1/datasets/{}/columns/Gender/histogram", info.id)).await);
    assert!(matches!(freq, Profile::Frequencies { .. }));
}

#[tokio::test]
async fn json_upload_with_classification() {
    let app = router(AppState::new());
    let table = Table { classification: [("Age".to_string(), AttributeClass::QuasiIdentifier)].into(), ..Table::new(CSV) };
    let info: DatasetInfo = parse(post_json(&app, "/v1/datasets", serde_json::to_value(&table).unwrap()).await);
    assert_eq!(info.schema.field("Age").unwrap().class, AttributeClass::QuasiIdentifier);
}

#[tokio::test]
async fn error_statuses() {
    let app = router(AppState::new());
    let (status, _) = call(&app, Method::POST, "/v1/datasets", Some("text/plain"), CSV.into()).await;
    assert_eq!(status, StatusCode::UNSUPPORTED_MEDIA_TYPE);
    let (status, _) = call(&app, Method::POST, "/v1/sessions", None, "{}".into()).await;
    assert_eq!(status, StatusCode::UNSUPPORTED_MEDIA_TYPE);
    let (status, body) = call(&app, Method::POST, "/v1/sessions", Some("application/json"), "{not json".into()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    assert!(body.contains("\"error\""));
    let (status, _) = call(&app, Method::POST, "/v1/datasets", Some("text/csv"), "A,B\n1\n".into()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/v1/sessions/nope").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/v1/datasets/nope/schema").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/v2/anything").await.0, StatusCode::NOT_FOUND);

    let session = open_session(&app).await;
    let base = format!("/v1/sessions/{}", session.id);
    let (status, body) = post_json(&app, &format!("{base}/steps"), json!({"variant": "TruncateDateTime", "column": "Age"})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    assert!(body.contains("Age"));
    let (status, _) = post_json(&app, &format!("{base}/steps"), json!({"variant": "BinQuantiles", "column": "Age", "q": 20})).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = post_json(&app, &format!("{base}/steps"), json!({"variant": "Shuffle"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, &format!("{base}/subset-risk?predicate=Age&scenario=0")).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, &format!("{base}/risk?scenario=7")).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(get(&app, &format!("{base}/risk?qis=Nope")).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(get(&app, &format!("{base}/risk?scenario=x")).await.0, StatusCode::BAD_REQUEST);
    let unknown: SessionView =
        parse(post_json(&app, "/v1/sessions", json!({"dataset_id": session.dataset_id, "scenarios": [["Nope"]]})).await);
    assert_eq!(unknown.current.scenarios[0].missing_columns, vec!["Nope".to_string()]);
    let bad = post_json(&app, "/v1/sessions", json!({"dataset_id": session.dataset_id, "scenarios": [["Age"]], "classification": {"Nope": "Sensitive"}})).await;
    assert_eq!(bad.0, StatusCode::UNPROCESSABLE_ENTITY);
    let missing = post_json(&app, "/v1/sessions", json!({"dataset_id": "nope", "scenarios": [["Age"]]})).await;
    assert_eq!(missing.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn step_risk_matches_library_on_transformed_file() {
    let app = router(AppState::new());
    let session = open_session(&app).await;
    let base = format!("/v1/sessions/{}", session.id);
    let report: StepReport = parse(post_json(&app, &format!("{base}/steps"), truncate()).await);
    assert_eq!(report.index, 1);
    let served: Assessment = parse(get(&app, &format!("{base}/risk?scenario=1")).await);

    let spec = TransformSpec {
        classification: serde_json::from_value(classification()).unwrap(),
        steps: vec![TransformStep::TruncateDateTime { column: "Test".into() }],
        seed: 0,
    };
    let (local, _) = deid_core::pipeline::transform(&load_csv(CSV.as_bytes(), None).unwrap(), &spec).unwrap();
    let direct = k_anonymity_risk(&local, &Scenario::new(["Age", "Test", "Gender"]).unwrap()).unwrap();
    match served {
        Assessment::KAnonymity(r) => {
            assert_eq!(r.risk_percent.to_bits(), direct.risk_percent.to_bits());
            assert_eq!(r, direct);
        }
        other => panic!("{other:?}"),
    }
    let by_name: Assessment = parse(get(&app, &format!("{base}/risk?qis=Age,Test,Gender")).await);
    assert_eq!(by_name, Assessment::KAnonymity(direct));
    let (status, csv) = get(&app, &format!("{base}/export")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(csv, to_csv_string(&local));
}

#[tokio::test]
async fn undo_restores_baseline() {
    let app = router(AppState::new());
    let session = open_session(&app).await;
    let base = format!("/v1/sessions/{}", session.id);
    let steps = [
        truncate(),
        json!({"variant": "BinFixedWidth", "column": "Age", "width": 10}),
        json!({"variant": "AddUniformIntegerNoise", "column": "Test", "lo": -3, "hi": 3}),
    ];
    for step in &steps {
        let _: StepReport = parse(post_json(&app, &format!("{base}/steps"), step.clone()).await);
    }
    let view: SessionView = parse(get(&app, &base).await);
    assert_eq!(view.steps.len(), 3);
    assert!(view.perturbed_columns.contains("Test"));
    assert_eq!(view.current.scenarios[1].assessment.as_ref().unwrap().metric(), deid_core::risk::Metric::RecordLinkage);
    for _ in &steps {
        let undo: UndoResponse = parse(call(&app, Method::POST, &format!("{base}/undo"), None, String::new()).await);
        assert!(undo.removed.is_some());
    }
    let view: SessionView = parse(get(&app, &base).await);
    assert_eq!(view.current, session.baseline);
    assert!(view.perturbed_columns.is_empty());
    let undo: UndoResponse = parse(call(&app, Method::POST, &format!("{base}/undo"), None, String::new()).await);
    assert!(undo.removed.is_none());
}

#[tokio::test]
async fn subset_report_and_histogram() {
    let app = router(AppState::new());
    let session = open_session(&app).await;
    let base = format!("/v1/sessions/{}", session.id);
    let _: StepReport = parse(post_json(&app, &format!("{base}/steps"), json!({"variant": "BinFixedWidth", "column": "Age", "width": 10})).await);
    let sub: Assessment = parse(get(&app, &format!("{base}/subset-risk?predicate=Outcome%3A%3D%3AD&scenario=0")).await);
    assert_eq!(sub.risk_percent(), 0.0);
    let (status, _) = get(&app, &format!("{base}/subset-risk?predicate=Outcome%3A%3D%3AZ&scenario=0")).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let report: RunReport = parse(get(&app, &format!("{base}/report")).await);
    assert_eq!(report.steps.len(), 1);
    let (status, md) = get(&app, &format!("{base}/report?format=markdown")).await;
    assert_eq!(status, StatusCode::OK);
    assert!(md.contains("## Step 1"));

    let diag: UtilityDiagnostic = parse(get(&app, &format!("{base}/columns/Age/histogram")).await);
    assert!(matches!(diag.before, Some(Profile::Histogram { .. })));
    assert!(matches!(diag.after, Some(Profile::Frequencies { .. })));
    assert_eq!(get(&app, &format!("{base}/columns/Nope/histogram")).await.0, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn concurrent_steps_are_serialized() {
    let app = router(AppState::new());
    let session = open_session(&app).await;
    let base = format!("/v1/sessions/{}", session.id);
    let tasks: Vec<_> = (1..=6)
        .map(|w| {
            let (app, uri) = (app.clone(), format!("{base}/steps"));
            tokio::spawn(async move {
                post_json(&app, &uri, json!({"variant": "BinFixedWidth", "column": "Age", "width": w * 5})).await
            })
        })
        .collect();
    let mut ok = 0;
    for t in tasks {
        let (status, _) = t.await.unwrap();
        ok += status.is_success() as usize;
    }
    let view: SessionView = parse(get(&app, &base).await);
    assert_eq!(view.steps.len(), ok);
    let indices: Vec<usize> = view.steps.iter().map(|s| s.index).collect();
    assert_eq!(indices, (1..=ok).collect::<Vec<_>>());
}

#[tokio::test]
async fn stateless_pipeline_matches_library() {
    let app = router(AppState::new());
    let spec: PipelineSpec = serde_json::from_value(json!({
        "classification": classification(),
        "steps": [truncate(), {"variant": "BinFixedWidth", "column": "Age", "width": 10},
                  {"variant": "AddUniformIntegerNoise", "column": "Test", "lo": -3, "hi": 3}],
        "scenarios": [["Age", "Gender"], ["Age", "Test", "Gender"]],
        "seed": 4
    }))
    .unwrap();
    let req = PipelineRequest { data: Table::new(CSV), spec: spec.clone() };
    let served: PipelineResponse = parse(post_json(&app, "/v1/pipeline", serde_json::to_value(&req).unwrap()).await);
    let (out, report) = run(&load_csv(CSV.as_bytes(), None).unwrap(), &spec).unwrap();
    assert_eq!(served.report, report);
    assert_eq!(served.csv.unwrap(), to_csv_string(&out));

    let assessed: deid_core::risk::RiskResult = parse(
        post_json(&app, "/v1/assess", json!({"data": {"csv": CSV, "classification": classification()}, "qis": ["Age", "Gender"], "subset": "Gender:=:F"})).await,
    );
    assert_eq!(assessed.risk_percent, 100.0);
    assert_eq!(assessed.row_count, 6);

    let (status, csv) = post_json(&app, "/v1/synth", json!({"n": 50, "seed": 3})).await;
    assert_eq!(status, StatusCode::OK, "{csv}");
    assert_eq!(csv.lines().count(), 51);
    let (status, _) = post_json(&app, "/v1/synth", json!({"n": 10, "fractions": {"death": 0.9, "nursing_home": 0.9}})).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn aborted_pipeline_returns_partial_report() {
    let app = router(AppState::new());
    let req = json!({
        "data": {"csv": CSV, "classification": classification()},
        "spec": {"steps": [truncate(), {"variant": "BinQuantiles", "column": "Age", "q": 50}], "scenarios": [["Age", "Gender"]]}
    });
    let served: PipelineResponse = parse(post_json(&app, "/v1/pipeline", req).await);
    assert!(served.csv.is_none());
    assert_eq!(served.report.aborted.unwrap().index, 2);
}

#[tokio::test]
async fn sessions_survive_restart_with_store() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::with_store(dir.path()).unwrap());
    let session = open_session(&app).await;
    let base = format!("/v1/sessions/{}", session.id);
    let _: StepReport = parse(post_json(&app, &format!("{base}/steps"), truncate()).await);
    let _: StepReport = parse(
        post_json(&app, &format!("{base}/steps"), json!({"variant": "AddUniformIntegerNoise", "column": "Test", "lo": -3, "hi": 3})).await,
    );
    let before: SessionView = parse(get(&app, &base).await);
    let (_, csv_before) = get(&app, &format!("{base}/export")).await;

    let restarted = router(AppState::with_store(dir.path()).unwrap());
    let after: SessionView = parse(get(&restarted, &base).await);
    assert_eq!(after, before);
    assert_eq!(get(&restarted, &format!("{base}/export")).await.1, csv_before);
    let schema = get(&restarted, &format!("/v1/datasets/{}/schema", session.dataset_id)).await;
    assert_eq!(schema.0, StatusCode::OK);
}

#[tokio::test]
async fn session_spec_steps_apply_at_creation() {
    let app = router(AppState::new());
    let dataset = upload(&app).await;
    let view: SessionView = parse(
        post_json(&app, "/v1/sessions", json!({"dataset_id": dataset.id, "classification": classification(),
            "scenarios": [["Age", "Gender"]], "steps": [{"variant": "BinFixedWidth", "column": "Age", "width": 10}]})).await,
    );
    assert_eq!(view.steps.len(), 1);
    assert_eq!(view.spec.steps.len(), 1);
}
