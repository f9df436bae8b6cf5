//! HTTP/JSON service under `/v1`: dataset upload, interactive sessions that
//! apply steps and reassess risk, and stateless batch operations.

mod error;
mod routes;
mod state;

use std::future::Future;
use std::io;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;

pub use error::{ApiError, ApiResult};
pub use state::{AppState, Session, SharedSession, Store};

/// Largest accepted request body.
pub const BODY_LIMIT: usize = 64 * 1024 * 1024;

pub fn router(state: AppState) -> Router {
    let v1 = Router::new()
        .route("/health", get(routes::health))
        .route("/datasets", post(routes::upload_dataset))
        .route("/datasets/{id}/schema", get(routes::dataset_schema))
        .route("/datasets/{id}/columns/{name}/histogram", get(routes::dataset_histogram))
        .route("/sessions", post(routes::create_session))
        .route("/sessions/{id}", get(routes::get_session))
        .route("/sessions/{id}/steps", post(routes::apply_step))
        .route("/sessions/{id}/undo", post(routes::undo))
        .route("/sessions/{id}/risk", get(routes::risk))
        .route("/sessions/{id}/subset-risk", get(routes::subset_risk))
        .route("/sessions/{id}/report", get(routes::report))
        .route("/sessions/{id}/export", get(routes::export))
        .route("/sessions/{id}/columns/{name}/histogram", get(routes::session_histogram))
        .route("/assess", post(routes::assess))
        .route("/transform", post(routes::transform))
        .route("/pipeline", post(routes::pipeline))
        .route("/synth", post(routes::synth));
    Router::new()
        .nest(deid_api::PREFIX, v1)
        .fallback(routes::not_found)
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(listener: TcpListener, state: AppState, shutdown: impl Future<Output = ()> + Send + 'static) -> io::Result<()> {
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}
