//! HTTP service. Models are loaded once at startup and shared read-only
//! between requests; inference runs on the blocking pool.
//!
//! Every served model is also reachable as a black-box endpoint under
//! `/models/{id}`, so one sarcalab service can stand in for another.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use sarcalab::blackbox::ModelEndpoint;
use sarcalab::lime::{explain, explanation_html, LimeConfig, TargetClass};
use sarcalab::pipeline::{InputKind, TextModel};
use sarcalab::preprocess::PipelineConfig;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;

use crate::artifacts::load_model_dir;
use crate::cli::ServeArgs;
use crate::commands::{connect, LimeOverrides};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct ModelDescriptor {
    pub model_id: String,
    /// `native` or `endpoint`.
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    pub input_kind: InputKind,
    /// Model directory or endpoint URL.
    pub source: String,
}

pub struct ServedModel {
    pub descriptor: ModelDescriptor,
    pub model: Arc<dyn TextModel>,
    pub preprocess: PipelineConfig,
}

pub struct AppState {
    models: Vec<ServedModel>,
    runs_dir: Option<PathBuf>,
    lime: LimeConfig,
}

impl AppState {
    pub fn new(models: Vec<ServedModel>, runs_dir: Option<PathBuf>, lime: LimeConfig) -> CliResult<AppState> {
        if models.is_empty() {
            return Err(CliError::config("`serve` needs at least one --model or --endpoint"));
        }
        for (i, m) in models.iter().enumerate() {
            if models[..i]
                .iter()
                .any(|o| o.descriptor.model_id == m.descriptor.model_id)
            {
                return Err(CliError::config(format!(
                    "model id {:?} is used twice",
                    m.descriptor.model_id
                )));
            }
        }
        lime.validate()?;
        Ok(AppState { models, runs_dir, lime })
    }

    fn find(&self, id: Option<&str>) -> Result<&ServedModel, ApiError> {
        match id {
            None => Ok(&self.models[0]),
            Some(id) => self
                .models
                .iter()
                .find(|m| m.descriptor.model_id == id)
                .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no model {id:?} is loaded"))),
        }
    }
}

/// Loads a trained model directory for serving.
pub fn native_model(dir: &Path, id: Option<&str>) -> CliResult<ServedModel> {
    let loaded = load_model_dir(dir, id)?;
    let preprocess = loaded.pipeline.preprocess_config().clone();
    let descriptor = ModelDescriptor {
        model_id: loaded.pipeline.model_id().to_string(),
        kind: "native",
        algorithm: Some(loaded.summary.algorithm.clone()),
        input_kind: InputKind::Preprocessed,
        source: dir.display().to_string(),
    };
    Ok(ServedModel {
        descriptor,
        model: Arc::new(loaded.pipeline),
        preprocess,
    })
}

/// Registers a remote model after checking its health.
pub fn remote_model(endpoint: &ModelEndpoint) -> CliResult<ServedModel> {
    let m = connect(endpoint).map_err(|e| e.context(format!("endpoint {}", endpoint.base_url)))?;
    Ok(ServedModel {
        descriptor: ModelDescriptor {
            model_id: endpoint.model_id.clone(),
            kind: "endpoint",
            algorithm: None,
            input_kind: InputKind::Raw,
            source: endpoint.base_url.clone(),
        },
        model: Arc::new(m),
        preprocess: PipelineConfig::default(),
    })
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }
}

impl From<sarcalab::Error> for ApiError {
    fn from(e: sarcalab::Error) -> Self {
        use sarcalab::Error as E;
        let status = match &e {
            E::Config(_) | E::Precondition(_) | E::InvalidLabel(_) => StatusCode::UNPROCESSABLE_ENTITY,
            E::Endpoint { .. } | E::Unreachable(_) | E::Incompatible(_) => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.message, "status": self.status.as_u16() });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("worker failed: {e}")))?
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictRequest {
    #[serde(default)]
    model_id: Option<String>,
    texts: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplainRequest {
    #[serde(default)]
    model_id: Option<String>,
    text: String,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    n_samples: Option<usize>,
    #[serde(default)]
    kernel_width: Option<f64>,
    #[serde(default)]
    ridge_lambda: Option<f64>,
    #[serde(default)]
    top_k: Option<usize>,
    #[serde(default)]
    target_class: Option<TargetClass>,
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("invalid request: {e}")))
}

async fn health(State(s): State<Arc<AppState>>) -> Json<Value> {
    let ids: Vec<&str> = s.models.iter().map(|m| m.descriptor.model_id.as_str()).collect();
    Json(json!({
        "status": "ok",
        "model_id": ids[0],
        "n_classes": 2,
        "models": ids,
        "seed": s.lime.seed,
    }))
}

async fn models(State(s): State<Arc<AppState>>) -> Json<Value> {
    let d: Vec<&ModelDescriptor> = s.models.iter().map(|m| &m.descriptor).collect();
    Json(json!({ "models": d, "seed": s.lime.seed }))
}

fn predict_with(s: Arc<AppState>, id: Option<String>, texts: Vec<String>) -> Result<Value, ApiError> {
    let m = s.find(id.as_deref())?;
    if texts.is_empty() {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "texts is empty"));
    }
    let probs = m.model.predict_proba_texts(&texts)?;
    Ok(json!({ "probs": probs, "model_id": m.descriptor.model_id, "seed": s.lime.seed }))
}

async fn predict(State(s): State<Arc<AppState>>, body: axum::body::Bytes) -> ApiResult<Value> {
    let req: PredictRequest = parse_body(&body)?;
    blocking(move || predict_with(s, req.model_id, req.texts))
        .await
        .map(Json)
}

async fn explain_route(State(s): State<Arc<AppState>>, body: axum::body::Bytes) -> ApiResult<Value> {
    let req: ExplainRequest = parse_body(&body)?;
    if req.text.trim().is_empty() {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "text is empty"));
    }
    blocking(move || {
        let m = s.find(req.model_id.as_deref())?;
        let mut cfg = LimeOverrides {
            n_samples: req.n_samples,
            kernel_width: req.kernel_width,
            ridge_lambda: req.ridge_lambda,
            top_k: req.top_k,
            target_class: req.target_class,
        }
        .apply(s.lime);
        cfg.seed = req.seed.unwrap_or(s.lime.seed);
        let e = explain(&req.text, m.model.as_ref(), &m.preprocess, &cfg)?;
        let html = explanation_html(&e);
        let mut v =
            serde_json::to_value(&e).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
        v["seed"] = json!(cfg.seed);
        v["html"] = json!(html);
        Ok(v)
    })
    .await
    .map(Json)
}

async fn model_health(State(s): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Value> {
    let m = s.find(Some(&id))?;
    Ok(Json(json!({ "model_id": m.descriptor.model_id, "n_classes": 2 })))
}

async fn model_predict(
    State(s): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: axum::body::Bytes,
) -> ApiResult<Value> {
    #[derive(Deserialize)]
    struct Texts {
        texts: Vec<String>,
    }
    let req: Texts = parse_body(&body)?;
    blocking(move || predict_with(s, Some(id), req.texts)).await.map(Json)
}

fn valid_run_id(id: &str) -> bool {
    !id.is_empty()
        && id != "."
        && id != ".."
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

async fn metrics(State(s): State<Arc<AppState>>, UrlPath(run_id): UrlPath<String>) -> ApiResult<Value> {
    let Some(root) = &s.runs_dir else {
        return Err(ApiError::new(StatusCode::NOT_FOUND, "no runs directory is configured"));
    };
    if !valid_run_id(&run_id) {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            format!("invalid run id {run_id:?}"),
        ));
    }
    let dir = root.join(&run_id);
    for name in ["metrics.json", "report.json"] {
        let path = dir.join(name);
        if let Ok(raw) = tokio::fs::read_to_string(&path).await {
            let v: Value = serde_json::from_str(&raw)
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("{}: {e}", path.display())))?;
            return Ok(Json(v));
        }
    }
    Err(ApiError::new(
        StatusCode::NOT_FOUND,
        format!("no metrics for run {run_id:?}"),
    ))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/models", get(models))
        .route("/predict", post(predict))
        .route("/explain", post(explain_route))
        .route("/metrics/{run_id}", get(metrics))
        .route("/models/{id}/health", get(model_health))
        .route("/models/{id}/predict", post(model_predict))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

fn split_named(s: &str) -> (Option<&str>, &str) {
    match s.split_once('=') {
        Some((id, rest)) if !id.is_empty() && !id.contains('/') => (Some(id), rest),
        _ => (None, s),
    }
}

/// Loads everything named on the command line (and in the config file);
/// any failure aborts startup.
pub fn build_state(args: &ServeArgs, file: RunConfig) -> CliResult<AppState> {
    let mut models = Vec::new();
    for spec in &args.models {
        let (id, dir) = split_named(spec);
        models.push(native_model(Path::new(dir), id)?);
    }
    if let Some(dir) = &file.model_dir {
        models.push(native_model(dir, file.model_id.as_deref())?);
    }
    for spec in &args.endpoints {
        let (Some(id), url) = split_named(spec) else {
            return Err(CliError::config(format!("--endpoint expects ID=URL, got {spec:?}")));
        };
        let mut e = ModelEndpoint::new(url, id);
        if let Some(t) = args.endpoint_timeout_ms {
            e.timeout_ms = t;
        }
        e.validate()?;
        models.push(remote_model(&e)?);
    }
    if let Some(e) = &file.endpoint {
        models.push(remote_model(e)?);
    }
    let mut lime = file.lime.unwrap_or_default();
    if let Some(seed) = args.seed.or(file.seed) {
        lime.seed = seed;
    }
    AppState::new(models, args.runs_dir.clone(), lime)
}

pub fn serve(args: &ServeArgs, file: RunConfig) -> CliResult<()> {
    let state = Arc::new(build_state(args, file)?);
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::runtime(format!("cannot start runtime: {e}")))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&args.addr)
            .await
            .map_err(|e| CliError::runtime(format!("cannot listen on {}: {e}", args.addr)))?;
        let addr = listener.local_addr().map_err(|e| CliError::runtime(e.to_string()))?;
        let ids: Vec<&str> = state.models.iter().map(|m| m.descriptor.model_id.as_str()).collect();
        eprintln!("serving {} on http://{addr}", ids.join(", "));
        axum::serve(listener, router(state.clone()))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::runtime(format!("server error: {e}")))
    })
}
