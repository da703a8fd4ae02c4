//! Stateless HTTP JSON API over the pedigree inference engine.
//!
//! Routes:
//!
//! - `POST /api/validate`: body is a pedigree document; 200 with a
//!   validation report when valid, 422 with the same report otherwise.
//! - `POST /api/smooth`: body is an [`InferRequest`] naming one pattern;
//!   returns an `InferenceResult`.
//! - `POST /api/predict`: body is an [`InferRequest`]; returns a
//!   `Prediction`.
//! - `GET /api/health`: `{"status":"ok"}`.
//!
//! Malformed bodies and out-of-range settings get 400, model rejections
//! 422, and impossible evidence a normal 200 whose marginals read `"-inf"`.

pub mod api;

use std::net::SocketAddr;

use axum::body::Bytes;
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tower_http::cors::{Any, CorsLayer};

pub use api::{ApiError, InferRequest, PatternChoice, Reply, ValidationReport, MAX_PERSONS, MAX_SAMPLES};

fn json(status: StatusCode, body: String) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))],
        body,
    )
        .into_response()
}

fn error(e: ApiError) -> Response {
    let status = StatusCode::from_u16(e.status()).expect("valid status code");
    json(status, e.body())
}

async fn health() -> Response {
    json(StatusCode::OK, api::render(&serde_json::json!({ "status": "ok" })))
}

async fn validate(body: Bytes) -> Response {
    match api::parse_document(&body) {
        Ok(doc) => {
            let report = api::validate(&doc);
            let status = if report.valid { StatusCode::OK } else { StatusCode::UNPROCESSABLE_ENTITY };
            json(status, api::render(&report))
        }
        Err(e) => error(e),
    }
}

/// Parses, applies the service caps and runs `op` off the async executor.
async fn infer(body: Bytes, op: fn(&InferRequest) -> Result<Reply, ApiError>) -> Response {
    let req = match api::parse_request(&body).and_then(|r| r.check_limits().map(|()| r)) {
        Ok(r) => r,
        Err(e) => return error(e),
    };
    match tokio::task::spawn_blocking(move || op(&req)).await {
        Ok(Ok(reply)) => json(StatusCode::OK, reply.body),
        Ok(Err(e)) => error(e),
        Err(join) => json(
            StatusCode::INTERNAL_SERVER_ERROR,
            api::render(&serde_json::json!({ "error": join.to_string() })),
        ),
    }
}

async fn smooth(body: Bytes) -> Response {
    infer(body, api::smooth).await
}

async fn predict(body: Bytes) -> Response {
    infer(body, api::predict).await
}

pub fn router() -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    Router::new()
        .route("/api/health", get(health))
        .route("/api/validate", post(validate))
        .route("/api/smooth", post(smooth))
        .route("/api/predict", post(predict))
        .layer(cors)
}

/// Serves [`router`] on `addr` until the process is stopped.
pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router()).await
}
