//! Client for external probability endpoints.
//!
//! Wire protocol (JSON, UTF-8):
//!
//! * `POST {base}/predict` with `{"texts": [...]}` answers `{"probs": [[p0, p1], ...]}`
//! * `GET {base}/health` answers `{"model_id": ..., "n_classes": ...}`
//!
//! Texts are sent raw; the remote model owns its tokenization. Batches larger
//! than `max_batch` are split and the answers concatenated in input order.
//! A timed-out request is retried once before failing.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::classifiers::ProbaRow;
use crate::error::{EndpointError, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelEndpoint {
    pub base_url: String,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(default = "default_batch")]
    pub max_batch: usize,
    pub model_id: String,
}

fn default_timeout() -> u64 {
    30_000
}

fn default_batch() -> usize {
    64
}

impl ModelEndpoint {
    pub fn new(base_url: impl Into<String>, model_id: impl Into<String>) -> Self {
        ModelEndpoint {
            base_url: base_url.into(),
            timeout_ms: default_timeout(),
            max_batch: default_batch(),
            model_id: model_id.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.timeout_ms == 0 {
            return Err(Error::config("endpoint timeout must be positive"));
        }
        if self.max_batch == 0 {
            return Err(Error::config("endpoint max_batch must be at least 1"));
        }
        if self.base_url.is_empty() {
            return Err(Error::config("endpoint base URL is empty"));
        }
        Ok(())
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}/{}", self.base_url.trim_end_matches('/'), path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthInfo {
    pub model_id: String,
    pub n_classes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictResponse {
    pub probs: Vec<Vec<f64>>,
}

/// Checks one response against the request size and the distribution
/// contract (two non-negative finite entries summing to 1 within 1e-6).
pub fn validate_rows(resp: PredictResponse, expected: usize) -> Result<Vec<ProbaRow>, EndpointError> {
    if resp.probs.len() != expected {
        return Err(EndpointError::RowCount {
            expected,
            found: resp.probs.len(),
        });
    }
    resp.probs
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let [a, b] = <[f64; 2]>::try_from(row.as_slice())
                .map_err(|_| EndpointError::Malformed(format!("row {i} has {} entries, expected 2", row.len())))?;
            let ok = a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0;
            if !ok || (a + b - 1.0).abs() > 1e-6 {
                return Err(EndpointError::Malformed(format!(
                    "row {i} is not a probability distribution: [{a}, {b}]"
                )));
            }
            Ok([a, b])
        })
        .collect()
}

/// Batch ranges of at most `max_batch` items covering `0..n`.
pub fn batch_ranges(n: usize, max_batch: usize) -> Vec<Range<usize>> {
    (0..n)
        .step_by(max_batch.max(1))
        .map(|s| s..(s + max_batch).min(n))
        .collect()
}

#[cfg(feature = "http")]
mod http {
    use std::time::Duration;

    use ureq::Agent;

    use super::*;
    use crate::pipeline::{InputKind, TextModel};

    /// Blocking HTTP client for a [`ModelEndpoint`].
    #[derive(Debug, Clone)]
    pub struct HttpModel {
        endpoint: ModelEndpoint,
        agent: Agent,
    }

    fn classify(e: ureq::Error) -> EndpointError {
        match e {
            ureq::Error::Timeout(_) => EndpointError::Timeout,
            ureq::Error::StatusCode(c) => EndpointError::Status(c),
            ureq::Error::Json(e) => EndpointError::Malformed(e.to_string()),
            ureq::Error::Io(e) if e.kind() == std::io::ErrorKind::TimedOut => EndpointError::Timeout,
            other => EndpointError::Transport(other.to_string()),
        }
    }

    impl HttpModel {
        pub fn new(endpoint: ModelEndpoint) -> Result<HttpModel> {
            endpoint.validate()?;
            let agent = Agent::config_builder()
                .timeout_global(Some(Duration::from_millis(endpoint.timeout_ms)))
                .http_status_as_error(false)
                .build()
                .into();
            Ok(HttpModel { endpoint, agent })
        }

        pub fn endpoint(&self) -> &ModelEndpoint {
            &self.endpoint
        }

        fn post_once(&self, texts: &[String]) -> Result<PredictResponse, EndpointError> {
            let body = PredictRequest { texts: texts.to_vec() };
            let mut resp = self
                .agent
                .post(self.endpoint.url("predict"))
                .send_json(&body)
                .map_err(classify)?;
            let status = resp.status().as_u16();
            if !(200..300).contains(&status) {
                return Err(EndpointError::Status(status));
            }
            resp.body_mut()
                .read_json::<PredictResponse>()
                .map_err(|e| EndpointError::Malformed(e.to_string()))
        }

        fn predict_batch(&self, texts: &[String]) -> Result<Vec<ProbaRow>, EndpointError> {
            let resp = match self.post_once(texts) {
                Err(EndpointError::Timeout) => self.post_once(texts)?,
                other => other?,
            };
            validate_rows(resp, texts.len())
        }

        pub fn healthcheck(&self) -> Result<HealthInfo> {
            let mut resp = self
                .agent
                .get(self.endpoint.url("health"))
                .call()
                .map_err(|e| Error::Unreachable(format!("{}: {e}", self.endpoint.base_url)))?;
            let status = resp.status().as_u16();
            if !(200..300).contains(&status) {
                return Err(Error::Unreachable(format!(
                    "{} answered HTTP {status}",
                    self.endpoint.url("health")
                )));
            }
            let info: HealthInfo = resp
                .body_mut()
                .read_json()
                .map_err(|e| Error::Incompatible(format!("malformed health response: {e}")))?;
            if info.n_classes != 2 {
                return Err(Error::Incompatible(format!(
                    "model {} reports {} classes; only binary models are supported",
                    info.model_id, info.n_classes
                )));
            }
            Ok(info)
        }
    }

    impl TextModel for HttpModel {
        fn model_id(&self) -> &str {
            &self.endpoint.model_id
        }

        fn input_kind(&self) -> InputKind {
            InputKind::Raw
        }

        fn predict_proba_texts(&self, texts: &[String]) -> Result<Vec<ProbaRow>> {
            remote_rows(self, texts)
        }
    }

    fn remote_rows(m: &HttpModel, texts: &[String]) -> Result<Vec<ProbaRow>> {
        let mut out = Vec::with_capacity(texts.len());
        for range in batch_ranges(texts.len(), m.endpoint.max_batch) {
            let rows = m
                .predict_batch(&texts[range.clone()])
                .map_err(|kind| Error::Endpoint { range, kind })?;
            out.extend(rows);
        }
        Ok(out)
    }

    /// Probability rows for `texts` from a remote endpoint.
    pub fn remote_predict_proba(e: &ModelEndpoint, texts: &[String]) -> Result<Vec<ProbaRow>> {
        if texts.is_empty() {
            return Err(Error::precondition("no texts to classify"));
        }
        if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
            return Err(Error::precondition(format!("text {i} is empty")));
        }
        remote_rows(&HttpModel::new(e.clone())?, texts)
    }

    pub fn healthcheck(e: &ModelEndpoint) -> Result<HealthInfo> {
        HttpModel::new(e.clone())?.healthcheck()
    }
}

#[cfg(feature = "http")]
pub use http::{healthcheck, remote_predict_proba, HttpModel};
