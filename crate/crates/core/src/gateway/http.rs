//! REST endpoints.
//!
//! * `GET  /v1/price?spot=&strike=&rate=&vol=&expiry=&kind=&paths=&seed=[&backend=]`
//! * `POST /v1/price` with `{"options":[{spot,strike,rate,vol,expiry,kind}...],"paths":N,"seed_base":S[,"backend":B]}`
//! * `GET  /v1/healthz`
//! * `GET  /v1/metrics`
//! * `POST /v1/workers/restart?backend=B` replaces the pool's workers with fresh ones
//! * `POST /v1/workers/warm?backend=B` warms every worker of the pool

use std::collections::HashMap;
use std::future::Future;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Map, Value};

use super::request::PricingRequest;
use super::service::{Gateway, ServiceError};
use crate::pricing::{OptionKind, OptionSpec};

pub const DEFAULT_PATHS: u64 = 100_000;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        match self {
            ServiceError::BadRequest { field, reason } => (
                StatusCode::BAD_REQUEST,
                Json(json!({ "error": "invalid request", "field": field, "reason": reason })),
            )
                .into_response(),
            ServiceError::Unavailable(reason) => (
                StatusCode::SERVICE_UNAVAILABLE,
                Json(json!({ "error": "unavailable", "reason": reason })),
            )
                .into_response(),
        }
    }
}

pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new()
        .route("/v1/price", get(price_get).post(price_post))
        .route("/v1/healthz", get(healthz))
        .route("/v1/metrics", get(metrics))
        .route("/v1/workers/restart", post(restart))
        .route("/v1/workers/warm", post(warm))
        .with_state(gateway)
}

/// Serves `gateway` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    gateway: Arc<Gateway>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(gateway))
        .with_graceful_shutdown(shutdown)
        .await
}

fn query_f64(q: &HashMap<String, String>, key: &str) -> Result<f64, ServiceError> {
    let raw = q
        .get(key)
        .ok_or_else(|| ServiceError::bad(key, "missing"))?;
    raw.parse::<f64>()
        .map_err(|_| ServiceError::bad(key, format!("not a number: {raw:?}")))
}

fn query_u64(q: &HashMap<String, String>, key: &str, default: u64) -> Result<u64, ServiceError> {
    match q.get(key) {
        None => Ok(default),
        Some(raw) => raw
            .parse::<u64>()
            .map_err(|_| ServiceError::bad(key, format!("not an unsigned integer: {raw:?}"))),
    }
}

fn parse_query(q: &HashMap<String, String>) -> Result<PricingRequest, ServiceError> {
    let kind = match q.get("kind") {
        None => OptionKind::Call,
        Some(k) => k.parse().map_err(|_| ServiceError::bad("kind", format!("expected call or put, got {k:?}")))?,
    };
    let spec = OptionSpec {
        spot: query_f64(q, "spot")?,
        strike: query_f64(q, "strike")?,
        rate: query_f64(q, "rate")?,
        volatility: query_f64(q, "vol")?,
        expiry: query_f64(q, "expiry")?,
        kind,
    };
    Ok(PricingRequest::new(
        vec![spec],
        query_u64(q, "paths", DEFAULT_PATHS)?,
        query_u64(q, "seed", 0)?,
    ))
}

fn field_f64(obj: &Map<String, Value>, key: &str, path: &str) -> Result<f64, ServiceError> {
    match obj.get(key) {
        Some(Value::Number(n)) => n
            .as_f64()
            .ok_or_else(|| ServiceError::bad(path, "not representable as f64")),
        Some(_) => Err(ServiceError::bad(path, "expected a number")),
        None => Err(ServiceError::bad(path, "missing")),
    }
}

fn field_u64(obj: &Map<String, Value>, key: &str, default: u64) -> Result<u64, ServiceError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v
            .as_u64()
            .ok_or_else(|| ServiceError::bad(key, "expected an unsigned integer")),
    }
}

/// Parses a batch body, reporting the path of the first bad field.
pub fn parse_batch(body: &[u8]) -> Result<(PricingRequest, Option<String>), ServiceError> {
    let value: Value = serde_json::from_slice(body)
        .map_err(|e| ServiceError::bad("body", format!("invalid JSON: {e}")))?;
    let Value::Object(root) = value else {
        return Err(ServiceError::bad("body", "expected a JSON object"));
    };
    let Some(Value::Array(items)) = root.get("options") else {
        return Err(ServiceError::bad("options", "expected an array"));
    };
    let mut options = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let Value::Object(o) = item else {
            return Err(ServiceError::bad(format!("options[{i}]"), "expected an object"));
        };
        let p = |k: &str| format!("options[{i}].{k}");
        let vol_key = if o.contains_key("vol") { "vol" } else { "volatility" };
        let kind = match o.get("kind") {
            None | Some(Value::Null) => OptionKind::Call,
            Some(Value::String(s)) => s
                .parse()
                .map_err(|_| ServiceError::bad(p("kind"), format!("expected call or put, got {s:?}")))?,
            Some(_) => return Err(ServiceError::bad(p("kind"), "expected a string")),
        };
        options.push(OptionSpec {
            spot: field_f64(o, "spot", &p("spot"))?,
            strike: field_f64(o, "strike", &p("strike"))?,
            rate: field_f64(o, "rate", &p("rate"))?,
            volatility: field_f64(o, vol_key, &p("vol"))?,
            expiry: field_f64(o, "expiry", &p("expiry"))?,
            kind,
        });
    }
    let backend = match root.get("backend") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(ServiceError::bad("backend", "expected a string")),
    };
    Ok((
        PricingRequest::new(
            options,
            field_u64(&root, "paths", DEFAULT_PATHS)?,
            field_u64(&root, "seed_base", 0)?,
        ),
        backend,
    ))
}

async fn price_get(
    State(gw): State<Arc<Gateway>>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, ServiceError> {
    let received = Instant::now();
    let request = parse_query(&q)?;
    let result = gw
        .handle_price(q.get("backend").map(String::as_str), request, received)
        .await?;
    Ok(Json(result).into_response())
}

async fn price_post(State(gw): State<Arc<Gateway>>, body: Bytes) -> Result<Response, ServiceError> {
    let received = Instant::now();
    let (request, backend) = parse_batch(&body)?;
    let result = gw.handle_price(backend.as_deref(), request, received).await?;
    Ok(Json(result).into_response())
}

async fn healthz(State(gw): State<Arc<Gateway>>) -> Response {
    Json(json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
        "backends": gw.health().await,
    }))
    .into_response()
}

async fn metrics(State(gw): State<Arc<Gateway>>) -> Response {
    Json(gw.metrics().snapshot()).into_response()
}

async fn restart(
    State(gw): State<Arc<Gateway>>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, ServiceError> {
    let pool = gw.pool(q.get("backend").map(String::as_str))?;
    pool.restart();
    Ok(Json(json!({ "backend": pool.name(), "workers": pool.workers().len() })).into_response())
}

async fn warm(
    State(gw): State<Arc<Gateway>>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, ServiceError> {
    let pool = gw.pool(q.get("backend").map(String::as_str))?;
    let failed = pool.warm_all().await;
    if failed > 0 {
        return Err(ServiceError::Unavailable(format!(
            "{failed} workers of {:?} failed to warm",
            pool.name()
        )));
    }
    Ok(Json(json!({ "backend": pool.name(), "warm": pool.workers().len() })).into_response())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_body_field_errors() {
        let err = parse_batch(br#"{"options":[{"spot":100,"strike":"x","rate":0,"vol":0.2,"expiry":1}]}"#)
            .unwrap_err();
        assert_eq!(err, ServiceError::bad("options[0].strike", "expected a number"));
        let err = parse_batch(br#"{"options":[{"spot":100,"strike":1,"rate":0,"expiry":1}]}"#).unwrap_err();
        assert_eq!(err, ServiceError::bad("options[0].vol", "missing"));
        let err = parse_batch(b"[1,2]").unwrap_err();
        assert!(matches!(err, ServiceError::BadRequest { field, .. } if field == "body"));
        let err = parse_batch(br#"{"options":[{"spot":1,"strike":1,"rate":0,"vol":0,"expiry":1,"kind":"swap"}]}"#)
            .unwrap_err();
        assert!(matches!(err, ServiceError::BadRequest { field, .. } if field == "options[0].kind"));
        let err = parse_batch(br#"{"options":[],"paths":-3}"#).unwrap_err();
        assert!(matches!(err, ServiceError::BadRequest { field, .. } if field == "paths"));
    }

    #[test]
    fn batch_body_defaults() {
        let (req, backend) = parse_batch(
            br#"{"options":[{"spot":100,"strike":80,"rate":0,"vol":0,"expiry":1,"kind":"put"}],"backend":"gpu"}"#,
        )
        .unwrap();
        assert_eq!(req.paths, DEFAULT_PATHS);
        assert_eq!(req.seed_base, 0);
        assert_eq!(req.options[0].kind, OptionKind::Put);
        assert_eq!(backend.as_deref(), Some("gpu"));
    }

    #[test]
    fn query_parsing() {
        let q: HashMap<String, String> = [
            ("spot", "100"),
            ("strike", "80"),
            ("rate", "0"),
            ("vol", "0"),
            ("expiry", "1"),
            ("paths", "10"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        let r = parse_query(&q).unwrap();
        assert_eq!(r.paths, 10);
        assert_eq!(r.options[0].kind, OptionKind::Call);
        let mut bad = q.clone();
        bad.insert("spot".into(), "abc".into());
        assert!(matches!(parse_query(&bad), Err(ServiceError::BadRequest { field, .. }) if field == "spot"));
        let mut missing = q;
        missing.remove("expiry");
        assert!(matches!(parse_query(&missing), Err(ServiceError::BadRequest { field, .. }) if field == "expiry"));
    }
}
