//! HTTP API over the filing and record stores, consumed by the review UI.
//!
//! JSON responses are wrapped as `{"schema": "spot-api/1", "data": ...}`.
//! HTML and CSV responses carry the schema in an `x-spot-schema` header.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use spot_core::extract::{export_csv, inject_cell_anchors, Adjustment, ExportQuery, RecordStore, SegmentRecord};
use spot_core::ingestion::{FilingMeta, FilingStore};
use spot_core::SpotError;

pub const API_SCHEMA: &str = "spot-api/1";
pub const SCHEMA_HEADER: &str = "x-spot-schema";

#[derive(Clone)]
pub struct AppState {
    pub filings: Arc<FilingStore>,
    pub records: Arc<RecordStore>,
}

impl AppState {
    /// Opens both stores under one root directory.
    pub fn open(root: &std::path::Path) -> spot_core::Result<Self> {
        Ok(AppState {
            filings: Arc::new(FilingStore::open(root)?),
            records: Arc::new(RecordStore::open(root)?),
        })
    }
}

#[derive(Debug, Serialize)]
struct Envelope<T> {
    schema: &'static str,
    data: T,
}

fn envelope<T: Serialize>(data: T) -> Json<Envelope<T>> {
    Json(Envelope { schema: API_SCHEMA, data })
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    schema: &'static str,
    error: ErrorDetail,
}

#[derive(Debug, Serialize)]
struct ErrorDetail {
    status: u16,
    message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }
}

impl From<SpotError> for ApiError {
    fn from(e: SpotError) -> Self {
        let status = match &e {
            SpotError::NotFound { .. } | SpotError::UnknownCompany(_) => StatusCode::NOT_FOUND,
            SpotError::StaleAudit { .. } => StatusCode::CONFLICT,
            SpotError::Validation(_) | SpotError::Format(_) | SpotError::Json(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            log::error!("{e}");
        }
        ApiError {
            status,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            schema: API_SCHEMA,
            error: ErrorDetail {
                status: self.status.as_u16(),
                message: self.message,
            },
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn with_schema(content_type: &'static str, body: String) -> Response {
    let mut resp = body.into_response();
    let headers = resp.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static(content_type));
    headers.insert(SCHEMA_HEADER, HeaderValue::from_static(API_SCHEMA));
    resp
}

#[derive(Debug, Serialize)]
struct FilingSummary {
    #[serde(flatten)]
    meta: FilingMeta,
    extracted: bool,
    records: usize,
}

async fn list_filings(State(st): State<AppState>) -> ApiResult<impl IntoResponse> {
    let mut out = Vec::new();
    for meta in st.filings.list() {
        let records = st.records.filing_records(&meta.filing_id)?.len();
        out.push(FilingSummary {
            extracted: st.records.has_filing(&meta.filing_id),
            records,
            meta,
        });
    }
    Ok(envelope(out))
}

async fn filing_document(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let doc = st.filings.load(&id)?;
    Ok(with_schema("text/html; charset=utf-8", inject_cell_anchors(&doc.body)))
}

#[derive(Debug, Serialize)]
struct FilingSegments {
    filing_id: String,
    records: Vec<SegmentRecord>,
}

async fn filing_segments(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    if !st.filings.contains(&id) && !st.records.has_filing(&id) {
        return Err(SpotError::not_found("filing", &id).into());
    }
    let records = st.records.filing_records(&id)?;
    Ok(envelope(FilingSegments { filing_id: id, records }))
}

/// Body of `POST /records/{id}/adjustments`. `new_value` may be a JSON
/// number or a decimal string; `at` defaults to the time of receipt.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjustmentRequest {
    pub new_value: Value,
    pub author: String,
    #[serde(default)]
    pub at: Option<DateTime<Utc>>,
    #[serde(default)]
    pub note: Option<String>,
    #[serde(default)]
    pub expected_audit_len: Option<usize>,
}

fn parse_new_value(v: &Value) -> Result<Decimal, SpotError> {
    match v {
        Value::String(s) => Adjustment::parse_value(s),
        Value::Number(n) => Adjustment::parse_value(&n.to_string()),
        other => Err(SpotError::Validation(format!("new_value must be a number or string, got {other}"))),
    }
}

async fn post_adjustment(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: AdjustmentRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed adjustment: {e}")))?;
    let adj = Adjustment {
        record_id: id,
        new_value: parse_new_value(&req.new_value)?,
        author: req.author,
        at: req.at.unwrap_or_else(Utc::now),
        note: req.note,
    };
    let updated = st.records.apply_adjustment(adj, req.expected_audit_len)?;
    Ok((StatusCode::OK, envelope(updated)))
}

async fn export(State(st): State<AppState>, Query(q): Query<ExportQuery>) -> ApiResult<Response> {
    let records = st.records.query(&q)?;
    let csv = export_csv(&records, &q)?;
    Ok(with_schema("text/csv; charset=utf-8", csv))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/filings", get(list_filings))
        .route("/filings/{id}/document", get(filing_document))
        .route("/filings/{id}/segments", get(filing_segments))
        .route("/records/{id}/adjustments", post(post_adjustment))
        .route("/export", get(export))
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
