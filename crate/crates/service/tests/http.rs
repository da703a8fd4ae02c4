//! The HTTP routes, driven in-process.

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use pedigree_service::{api, router, InferRequest};
use serde_json::{json, Value};
use tower::ServiceExt;

fn trio() -> Value {
    json!({
        "persons": [
            {"id": "father", "sex": "male", "phenotype": "affected"},
            {"id": "mother", "sex": "female", "phenotype": "unaffected"},
            {"id": "son", "sex": "male", "phenotype": "affected"}
        ],
        "unions": [{"id": "u", "mother": "mother", "father": "father", "children": ["son"]}]
    })
}

async fn call(method: &str, uri: &str, body: Option<String>) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = router().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn post(uri: &str, body: &Value) -> (StatusCode, Value) {
    let (status, text) = call("POST", uri, Some(body.to_string())).await;
    (status, serde_json::from_str(&text).unwrap())
}

#[tokio::test]
async fn health_reports_ok() {
    let (status, body) = call("GET", "/api/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap(), json!({"status": "ok"}));
}

#[tokio::test]
async fn validate_accepts_a_trio() {
    let (status, body) = post("/api/validate", &trio()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["valid"], true);
    assert_eq!(body["violations"], json!([]));
}

#[tokio::test]
async fn validate_rejects_a_cycle_with_a_report() {
    let doc = json!({
        "persons": [
            {"id": "a", "sex": "female", "phenotype": "unaffected"},
            {"id": "b", "sex": "male", "phenotype": "unaffected"},
            {"id": "c", "sex": "male", "phenotype": "unaffected"}
        ],
        "unions": [
            {"id": "u1", "mother": "a", "father": "b", "children": ["c"]},
            {"id": "u2", "mother": "a", "father": "c", "children": ["b"]}
        ]
    });
    let (status, body) = post("/api/validate", &doc).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["valid"], false);
    let rules: Vec<&str> = body["violations"].as_array().unwrap().iter().map(|v| v["rule"].as_str().unwrap()).collect();
    assert!(rules.contains(&"cycle"), "{rules:?}");
}

#[tokio::test]
async fn malformed_bodies_are_bad_requests() {
    let (status, text) = call("POST", "/api/validate", Some("{not json".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(serde_json::from_str::<Value>(&text).unwrap()["error"].is_string());
    let (status, _) = call("POST", "/api/predict", Some("[]".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn predict_matches_the_shared_api_bytes() {
    let body = json!({"pedigree": trio(), "seed": 7, "samples": 20});
    let (status, text) = call("POST", "/api/predict", Some(body.to_string())).await;
    assert_eq!(status, StatusCode::OK);
    let mut req = InferRequest::new(serde_json::from_value(trio()).unwrap());
    req.seed = 7;
    req.samples = 20;
    assert_eq!(text, api::predict(&req).unwrap().body);

    let parsed: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["seed"], 7);
    assert_eq!(parsed["samples"], 20);
    let total: f64 = parsed["posterior"].as_object().unwrap().values().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[tokio::test]
async fn responses_do_not_depend_on_request_order() {
    let a = json!({"pedigree": trio(), "seed": 1, "samples": 10});
    let b = json!({"pedigree": trio(), "seed": 2, "samples": 10, "pattern": "XL"});
    let first = (post("/api/predict", &a).await, post("/api/smooth", &b).await);
    let second = (post("/api/smooth", &b).await, post("/api/predict", &a).await);
    assert_eq!(first.0, second.1);
    assert_eq!(first.1, second.0);
}

#[tokio::test]
async fn smoothing_with_a_forced_carrier_gives_a_point_mass() {
    let body = json!({
        "pedigree": trio(),
        "pattern": "XL",
        "evidence": {"mother": ["XAXa"]},
        "samples": 10,
        "seed": 3
    });
    let (status, out) = post("/api/smooth", &body).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(out["posteriors"]["mother"], json!({"XaXa": 0.0, "XAXa": 1.0, "XAXA": 0.0}));
    assert!(out["audit"]["anchor_spread"].as_f64().unwrap() <= 1e-10);
}

#[tokio::test]
async fn impossible_evidence_is_a_normal_answer() {
    let body = json!({
        "pedigree": trio(),
        "pattern": "XL",
        "evidence": {"son": ["XAY"]},
        "samples": 5
    });
    let (status, out) = post("/api/smooth", &body).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(out["log_marginal"], "-inf");
    assert_eq!(out["posteriors"], Value::Null);

    let body = json!({"pedigree": trio(), "evidence": {"son": ["noncarrier"]}, "samples": 5});
    let (status, out) = post("/api/predict", &body).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(out["log_marginals"], json!({"AD": "-inf", "AR": "-inf", "XL": "-inf"}));
    assert_eq!(out["predicted"], Value::Null);
}

#[tokio::test]
async fn model_rejections_are_unprocessable() {
    let body = json!({"pedigree": trio(), "pattern": "AD", "evidence": {"son": ["XaY"]}});
    let (status, out) = post("/api/smooth", &body).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(out["error"].as_str().unwrap().contains("XaY"));

    let mut doc = trio();
    doc["unions"][0]["children"] = json!(["ghost"]);
    let (status, out) = post("/api/predict", &json!({"pedigree": doc})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(out["valid"], false);
}

#[tokio::test]
async fn caps_and_settings_are_enforced() {
    let (status, _) = post("/api/predict", &json!({"pedigree": trio(), "samples": 10_001})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = post("/api/predict", &json!({"pedigree": trio(), "samples": 0})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = post("/api/smooth", &json!({"pedigree": trio()})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "smoothing needs one pattern");

    let persons: Vec<Value> = (0..=pedigree_service::MAX_PERSONS)
        .map(|i| json!({"id": format!("p{i}"), "sex": "female", "phenotype": "unaffected"}))
        .collect();
    let (status, out) = post("/api/predict", &json!({"pedigree": {"persons": persons}})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(out["error"].as_str().unwrap().contains("200"));
}

#[tokio::test]
async fn cors_preflight_is_answered() {
    let req = Request::builder()
        .method("OPTIONS")
        .uri("/api/predict")
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .header("access-control-request-headers", "content-type")
        .body(Body::empty())
        .unwrap();
    let resp = router().oneshot(req).await.unwrap();
    assert_eq!(resp.headers()["access-control-allow-origin"], "*");
}
