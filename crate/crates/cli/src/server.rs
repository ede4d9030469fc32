//! Stateless HTTP endpoint for interactive threshold tuning.
//!
//! * `GET /api/health` returns `{"status": "ok", "version": ...}`.
//! * `POST /api/analyze` accepts either `multipart/form-data` with an `image`
//!   file part, or `application/json` with `image_base64`. Optional fields in
//!   both forms: `card_width_mm`, `card_height_mm`, `bin_threshold`,
//!   `marker_threshold`, `correct` (`"a,b"`), `overlay`, `fractal`, `export`
//!   (`"json"` or `"csv"`) and, for JSON, `filename`.
//!
//! The response is `{"report": ..., "overlay_png_base64"?: ..., "export"?: ...}`
//! where `export` holds exactly the bytes `dropmeter analyze --format` writes.
//! Status codes: 400 malformed request or parameter, 413 body over the limit,
//! 422 undecodable image.

use std::net::SocketAddr;
use std::path::PathBuf;

use axum::body::{Body, Bytes};
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Request};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use dropmeter_core::report::TOOL_VERSION;
use dropmeter_core::{
    decode_bytes, encode_png, export_report, render_overlay, CardAnalysisReport, CorrectionParams,
    ExportFormat,
};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

use crate::pipeline::{analyze_image, timestamp_now, CardOptions};

pub const DEFAULT_MAX_BODY_BYTES: usize = 32 * 1024 * 1024;

#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub max_body_bytes: usize,
    /// Directory of static UI assets served at `/`.
    pub ui_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            max_body_bytes: DEFAULT_MAX_BODY_BYTES,
            ui_dir: None,
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }
}

impl From<dropmeter_core::Error> for ApiError {
    fn from(err: dropmeter_core::Error) -> Self {
        let status = match &err {
            dropmeter_core::Error::Decode(_) => StatusCode::UNPROCESSABLE_ENTITY,
            e if e.is_parameter_error() => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self {
            status,
            message: err.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.message });
        (self.status, Json(body)).into_response()
    }
}

/// JSON form of an analyze request.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeJson {
    pub image_base64: String,
    pub filename: Option<String>,
    pub card_width_mm: Option<f64>,
    pub card_height_mm: Option<f64>,
    pub bin_threshold: Option<f64>,
    pub marker_threshold: Option<f64>,
    pub correct: Option<String>,
    pub overlay: Option<bool>,
    pub fractal: Option<bool>,
    pub export: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnalyzeResponse {
    pub report: CardAnalysisReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlay_png_base64: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub export: Option<String>,
}

struct AnalyzeRequest {
    image: Bytes,
    filename: Option<String>,
    opts: CardOptions,
    overlay: bool,
    export: Option<ExportFormat>,
}

pub fn router(config: &ServerConfig) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/analyze", post(analyze))
        .layer(DefaultBodyLimit::max(config.max_body_bytes));
    let app = match &config.ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(placeholder)),
    };
    app.layer(CorsLayer::permissive())
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, config: ServerConfig) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(&config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "version": TOOL_VERSION }))
}

async fn placeholder() -> Html<&'static str> {
    Html(
        "<!doctype html><title>dropmeter</title>\
         <p>dropmeter API. POST a card image to <code>/api/analyze</code>; \
         start with <code>--ui-dir</code> to serve the web UI here.</p>",
    )
}

async fn analyze(req: Request) -> Result<Json<AnalyzeResponse>, ApiError> {
    let content_type = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or_default()
        .to_owned();
    let media_type = content_type.to_ascii_lowercase();
    // Carries the configured body limit over to the multipart parser.
    let extensions = req.extensions().clone();
    // Buffer first so the size limit yields 413 for either encoding.
    let bytes = Bytes::from_request(req, &()).await.map_err(|e| ApiError {
        status: e.status(),
        message: e.body_text(),
    })?;

    let request = if media_type.starts_with("multipart/form-data") {
        let mut rebuilt = Request::builder()
            .header(header::CONTENT_TYPE, content_type)
            .body(Body::from(bytes))
            .expect("static request parts");
        *rebuilt.extensions_mut() = extensions;
        let multipart = Multipart::from_request(rebuilt, &())
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()))?;
        parse_multipart(multipart).await?
    } else if media_type.starts_with("application/json") {
        let json: AnalyzeJson = serde_json::from_slice(&bytes)
            .map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))?;
        parse_json(json)?
    } else {
        return Err(ApiError {
            status: StatusCode::UNSUPPORTED_MEDIA_TYPE,
            message: "expected multipart/form-data or application/json".into(),
        });
    };

    // Parameter errors take precedence over image errors.
    request.opts.params.validate()?;
    let timestamp = timestamp_now();
    tokio::task::spawn_blocking(move || run(request, timestamp))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: e.to_string(),
        })?
        .map(Json)
}

fn run(req: AnalyzeRequest, timestamp: String) -> Result<AnalyzeResponse, ApiError> {
    let image = decode_bytes(&req.image)?;
    let analysis = analyze_image(&image, &req.opts, req.filename.as_deref(), Some(timestamp))?;
    let overlay_png_base64 = if req.overlay {
        let png = encode_png(&render_overlay(&image, &analysis.segmentation)?)?;
        Some(BASE64.encode(png))
    } else {
        None
    };
    let export = match req.export {
        Some(format) => Some(
            String::from_utf8(export_report(&analysis.report, format)?)
                .expect("reports serialize to UTF-8"),
        ),
        None => None,
    };
    Ok(AnalyzeResponse {
        report: analysis.report,
        overlay_png_base64,
        export,
    })
}

fn parse_number(name: &str, text: &str) -> Result<f64, ApiError> {
    text.trim()
        .parse()
        .map_err(|_| ApiError::bad_request(format!("field `{name}` is not a number: `{text}`")))
}

fn parse_flag(name: &str, text: &str) -> Result<bool, ApiError> {
    match text.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "on" | "yes" => Ok(true),
        "0" | "false" | "off" | "no" | "" => Ok(false),
        _ => Err(ApiError::bad_request(format!(
            "field `{name}` is not a boolean: `{text}`"
        ))),
    }
}

fn parse_correction(text: &str) -> Result<CorrectionParams, ApiError> {
    text.parse()
        .map_err(|e: dropmeter_core::Error| ApiError::bad_request(e.to_string()))
}

fn parse_export(text: &str) -> Result<ExportFormat, ApiError> {
    text.parse()
        .map_err(|e: dropmeter_core::Error| ApiError::bad_request(e.to_string()))
}

async fn parse_multipart(mut multipart: Multipart) -> Result<AnalyzeRequest, ApiError> {
    let mut image = None;
    let mut filename = None;
    let mut opts = CardOptions::default();
    let mut overlay = false;
    let mut export = None;
    let field_error = |e: axum::extract::multipart::MultipartError| ApiError {
        status: e.status(),
        message: e.body_text(),
    };
    while let Some(field) = multipart.next_field().await.map_err(field_error)? {
        let name = field.name().unwrap_or_default().to_owned();
        if name == "image" {
            filename = field.file_name().map(str::to_owned);
            image = Some(field.bytes().await.map_err(field_error)?);
            continue;
        }
        let text = field.text().await.map_err(field_error)?;
        match name.as_str() {
            "card_width_mm" => opts.card_width_mm = parse_number(&name, &text)?,
            "card_height_mm" => opts.card_height_mm = parse_number(&name, &text)?,
            "bin_threshold" => opts.params.bin_threshold = parse_number(&name, &text)?,
            "marker_threshold" => opts.params.marker_threshold = parse_number(&name, &text)?,
            "correct" => opts.params.correction = parse_correction(&text)?,
            "overlay" => overlay = parse_flag(&name, &text)?,
            "fractal" => opts.fractal = parse_flag(&name, &text)?,
            "export" => export = Some(parse_export(&text)?),
            other => return Err(ApiError::bad_request(format!("unknown field `{other}`"))),
        }
    }
    let image = image
        .filter(|b| !b.is_empty())
        .ok_or_else(|| ApiError::bad_request("missing or empty `image` part"))?;
    Ok(AnalyzeRequest {
        image,
        filename,
        opts,
        overlay,
        export,
    })
}

fn parse_json(json: AnalyzeJson) -> Result<AnalyzeRequest, ApiError> {
    let image = BASE64
        .decode(json.image_base64.trim())
        .map_err(|e| ApiError::bad_request(format!("`image_base64` is not valid base64: {e}")))?;
    if image.is_empty() {
        return Err(ApiError::bad_request("empty `image_base64`"));
    }
    let mut opts = CardOptions::default();
    if let Some(v) = json.card_width_mm {
        opts.card_width_mm = v;
    }
    if let Some(v) = json.card_height_mm {
        opts.card_height_mm = v;
    }
    if let Some(v) = json.bin_threshold {
        opts.params.bin_threshold = v;
    }
    if let Some(v) = json.marker_threshold {
        opts.params.marker_threshold = v;
    }
    if let Some(text) = &json.correct {
        opts.params.correction = parse_correction(text)?;
    }
    if let Some(v) = json.fractal {
        opts.fractal = v;
    }
    Ok(AnalyzeRequest {
        image: Bytes::from(image),
        filename: json.filename,
        opts,
        overlay: json.overlay.unwrap_or(false),
        export: json.export.as_deref().map(parse_export).transpose()?,
    })
}
