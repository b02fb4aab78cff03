use std::convert::Infallible;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, HeaderName, Method, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio_stream::wrappers::BroadcastStream;
use tokio_stream::StreamExt;
use tower_http::cors::{Any, CorsLayer};

use super::{CommandSource, GatewayError, GatewayHandle, Mode, ZoneRef};
use crate::intent::ParseError;

/// Header carrying the shared secret.
pub const TOKEN_HEADER: &str = "x-bitrl-token";

/// `POST /webhook/command`. `TextField` is accepted as an alias of `text`,
/// matching the ingredient name IFTTT's voice triggers use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandRequest {
    #[serde(alias = "TextField")]
    pub text: String,
    #[serde(default)]
    pub source: CommandSource,
    /// ISO-8601 client timestamp; informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    /// Body fallback for clients that cannot set headers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
}

/// `POST /webhook/override`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverrideRequest {
    pub zone: ZoneRef,
    /// Percent, rounded to the nearest 10.
    pub brightness: u32,
    /// Kelvin, snapped to the nearest bin; the zone's current value if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cct: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
}

/// `POST /mode`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRequest {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
}

/// `POST /step`: advance the clock `count` steps (default 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRequest {
    #[serde(default = "one")]
    pub count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
}

fn one() -> u32 {
    1
}

/// `POST /checkpoint`: save the online network to the configured path.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
}

trait BodyToken {
    fn token(&self) -> Option<&str>;
}

macro_rules! body_token {
    ($($t:ty),*) => {$(
        impl BodyToken for $t {
            fn token(&self) -> Option<&str> {
                self.token.as_deref()
            }
        }
    )*};
}
body_token!(
    CommandRequest,
    OverrideRequest,
    ModeRequest,
    StepRequest,
    CheckpointRequest
);

/// Error response body. `slot` and `detail` are set for parse failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<ParseError>,
}

impl IntoResponse for GatewayError {
    fn into_response(self) -> Response {
        let (status, code) = match &self {
            GatewayError::Unauthorized => (StatusCode::UNAUTHORIZED, "unauthorized"),
            GatewayError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            GatewayError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            GatewayError::NoParse(_) => (StatusCode::UNPROCESSABLE_ENTITY, "no_parse"),
            GatewayError::Stopped => (StatusCode::SERVICE_UNAVAILABLE, "stopped"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!(error = %self, "request failed");
        }
        let (slot, detail) = match &self {
            GatewayError::NoParse(e) => (Some(e.slot().to_string()), Some(e.clone())),
            _ => (None, None),
        };
        let body = ErrorBody {
            error: code.into(),
            message: self.to_string(),
            slot,
            detail,
        };
        (status, Json(body)).into_response()
    }
}

fn header_token(headers: &HeaderMap) -> Option<&str> {
    headers.get(TOKEN_HEADER).and_then(|v| v.to_str().ok())
}

fn authorize(h: &GatewayHandle, headers: &HeaderMap) -> Result<(), GatewayError> {
    match header_token(headers) {
        Some(t) if h.token_ok(t) => Ok(()),
        _ => Err(GatewayError::Unauthorized),
    }
}

/// Decodes a JSON body, authorizing by header or by the body's `token`.
/// Undecodable bodies are a 400 only for callers already authorized by header.
fn authorized_body<T: DeserializeOwned + BodyToken>(
    h: &GatewayHandle,
    headers: &HeaderMap,
    body: &Bytes,
) -> Result<T, GatewayError> {
    let by_header = authorize(h, headers).is_ok();
    let raw: &[u8] = if body.iter().all(u8::is_ascii_whitespace) {
        b"{}"
    } else {
        body
    };
    let parsed: T = match serde_json::from_slice(raw) {
        Ok(v) => v,
        Err(e) if by_header => return Err(GatewayError::BadRequest(format!("invalid body: {e}"))),
        Err(_) => return Err(GatewayError::Unauthorized),
    };
    if by_header || parsed.token().is_some_and(|t| h.token_ok(t)) {
        Ok(parsed)
    } else {
        Err(GatewayError::Unauthorized)
    }
}

async fn command(
    State(h): State<GatewayHandle>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<impl IntoResponse, GatewayError> {
    let req: CommandRequest = authorized_body(&h, &headers, &body)?;
    Ok(Json(h.command(req.text, req.source).await?))
}

async fn manual_override(
    State(h): State<GatewayHandle>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<impl IntoResponse, GatewayError> {
    let req: OverrideRequest = authorized_body(&h, &headers, &body)?;
    Ok(Json(
        h.manual_override(req.zone, req.brightness, req.cct).await?,
    ))
}

async fn set_mode(
    State(h): State<GatewayHandle>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<impl IntoResponse, GatewayError> {
    let req: ModeRequest = authorized_body(&h, &headers, &body)?;
    Ok(Json(h.set_mode(req.mode).await?))
}

async fn step(
    State(h): State<GatewayHandle>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<impl IntoResponse, GatewayError> {
    let req: StepRequest = authorized_body(&h, &headers, &body)?;
    Ok(Json(h.step(req.count).await?))
}

async fn checkpoint(
    State(h): State<GatewayHandle>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<impl IntoResponse, GatewayError> {
    let _: CheckpointRequest = authorized_body(&h, &headers, &body)?;
    let path = h.checkpoint().await?;
    Ok(Json(serde_json::json!({ "saved": path })))
}

async fn state(
    State(h): State<GatewayHandle>,
    headers: HeaderMap,
) -> Result<impl IntoResponse, GatewayError> {
    authorize(&h, &headers)?;
    Ok(Json(h.snapshot().state.clone()))
}

async fn metrics(
    State(h): State<GatewayHandle>,
    headers: HeaderMap,
) -> Result<impl IntoResponse, GatewayError> {
    authorize(&h, &headers)?;
    Ok(Json(h.snapshot().metrics.clone()))
}

#[derive(Deserialize)]
struct TokenQuery {
    token: Option<String>,
}

/// Server-sent events. Browsers' `EventSource` cannot set headers, so the
/// token may also come as `?token=`. A subscriber that falls too far behind
/// is disconnected rather than shown a gap.
async fn events(
    State(h): State<GatewayHandle>,
    headers: HeaderMap,
    Query(q): Query<TokenQuery>,
) -> Result<impl IntoResponse, GatewayError> {
    let ok = header_token(&headers)
        .or(q.token.as_deref())
        .is_some_and(|t| h.token_ok(t));
    if !ok {
        return Err(GatewayError::Unauthorized);
    }
    let stream = BroadcastStream::new(h.subscribe()).map_while(|item| {
        let ev = item.ok()?;
        let kind = serde_json::to_value(ev.kind).ok()?;
        let data = serde_json::to_string(&ev).ok()?;
        Some(Ok::<_, Infallible>(
            Event::default()
                .id(ev.seq.to_string())
                .event(kind.as_str().unwrap_or("event"))
                .data(data),
        ))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

async fn health() -> impl IntoResponse {
    Json(serde_json::json!({ "status": "ok" }))
}

pub fn router(handle: GatewayHandle) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE, HeaderName::from_static(TOKEN_HEADER)]);
    Router::new()
        .route("/webhook/command", post(command))
        .route("/webhook/override", post(manual_override))
        .route("/state", get(state))
        .route("/metrics", get(metrics))
        .route("/events", get(events))
        .route("/mode", post(set_mode))
        .route("/step", post(step))
        .route("/checkpoint", post(checkpoint))
        .route("/health", get(health))
        .layer(cors)
        .with_state(handle)
}
