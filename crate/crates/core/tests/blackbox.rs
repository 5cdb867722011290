#![cfg(feature = "http")]

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use sarcalab::blackbox::{healthcheck, remote_predict_proba, HttpModel, ModelEndpoint};
use sarcalab::error::EndpointError;
use sarcalab::pipeline::{InputKind, TextModel};
use sarcalab::Error;
use serde_json::{json, Value};

#[derive(Default)]
struct Mock {
    batches: Mutex<Vec<usize>>,
    slow_calls: AtomicUsize,
}

fn marker(t: &str) -> [f64; 2] {
    if t.contains("wahre") {
        [0.1, 0.9]
    } else {
        [0.8, 0.2]
    }
}

async fn predict(
    State(s): State<Arc<Mock>>,
    Path(kind): Path<String>,
    Json(body): Json<Value>,
) -> Result<Json<Value>, StatusCode> {
    let texts: Vec<String> = serde_json::from_value(body["texts"].clone()).unwrap();
    s.batches.lock().unwrap().push(texts.len());
    let rows: Vec<[f64; 2]> = match kind.as_str() {
        "const" => vec![[0.3, 0.7]; texts.len()],
        "echo" => texts.iter().map(|t| marker(t)).collect(),
        "short" => vec![[0.5, 0.5]; texts.len().saturating_sub(1)],
        "unnormalized" => vec![[0.5, 0.7]; texts.len()],
        "down" => return Err(StatusCode::INTERNAL_SERVER_ERROR),
        "slow" | "slower" => {
            let n = s.slow_calls.fetch_add(1, Ordering::SeqCst);
            if kind == "slower" || n == 0 {
                tokio::time::sleep(Duration::from_millis(600)).await;
            }
            vec![[0.4, 0.6]; texts.len()]
        }
        _ => return Err(StatusCode::NOT_FOUND),
    };
    Ok(Json(json!({ "probs": rows })))
}

async fn health(Path(kind): Path<String>) -> Json<Value> {
    let n = if kind == "three" { 3 } else { 2 };
    Json(json!({ "model_id": kind, "n_classes": n }))
}

fn spawn_mock() -> (SocketAddr, Arc<Mock>) {
    let state = Arc::new(Mock::default());
    let app = Router::new()
        .route("/{kind}/predict", post(predict))
        .route("/{kind}/health", get(health))
        .with_state(state.clone());
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let l = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(l.local_addr().unwrap()).unwrap();
            axum::serve(l, app).await.unwrap();
        });
    });
    (rx.recv().unwrap(), state)
}

fn endpoint(addr: SocketAddr, kind: &str) -> ModelEndpoint {
    ModelEndpoint::new(format!("http://{addr}/{kind}"), kind)
}

fn texts(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            if i % 3 == 0 {
                format!("wahre {i}")
            } else {
                format!("bhalo {i}")
            }
        })
        .collect()
}

#[test]
fn constant_endpoint_rows() {
    let (addr, _) = spawn_mock();
    let rows = remote_predict_proba(&endpoint(addr, "const"), &texts(5)).unwrap();
    assert_eq!(rows, vec![[0.3, 0.7]; 5]);
}

#[test]
fn chunked_equals_unchunked() {
    let (addr, state) = spawn_mock();
    let mut e = endpoint(addr, "echo");
    e.max_batch = 1000;
    let whole = remote_predict_proba(&e, &texts(23)).unwrap();
    e.max_batch = 4;
    let chunked = remote_predict_proba(&e, &texts(23)).unwrap();
    assert_eq!(whole, chunked);
    assert_eq!(whole[0], [0.1, 0.9]);
    assert_eq!(whole[1], [0.8, 0.2]);
    assert_eq!(*state.batches.lock().unwrap(), vec![23, 4, 4, 4, 4, 4, 3]);
}

#[test]
fn row_count_mismatch_names_batch() {
    let (addr, _) = spawn_mock();
    let mut e = endpoint(addr, "short");
    e.max_batch = 3;
    match remote_predict_proba(&e, &texts(3)) {
        Err(Error::Endpoint { range, kind }) => {
            assert_eq!(range, 0..3);
            assert_eq!(kind, EndpointError::RowCount { expected: 3, found: 2 });
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn malformed_and_status_errors() {
    let (addr, _) = spawn_mock();
    let err = remote_predict_proba(&endpoint(addr, "unnormalized"), &texts(2)).unwrap_err();
    assert!(matches!(
        err,
        Error::Endpoint {
            kind: EndpointError::Malformed(_),
            ..
        }
    ));
    let err = remote_predict_proba(&endpoint(addr, "down"), &texts(2)).unwrap_err();
    assert!(matches!(
        err,
        Error::Endpoint {
            kind: EndpointError::Status(500),
            ..
        }
    ));
}

#[test]
fn timeout_is_retried_once() {
    let (addr, state) = spawn_mock();
    let mut e = endpoint(addr, "slow");
    e.timeout_ms = 300;
    let rows = remote_predict_proba(&e, &texts(2)).unwrap();
    assert_eq!(rows, vec![[0.4, 0.6]; 2]);
    assert_eq!(state.slow_calls.load(Ordering::SeqCst), 2);

    let mut e = endpoint(addr, "slower");
    e.timeout_ms = 300;
    let err = remote_predict_proba(&e, &texts(2)).unwrap_err();
    assert!(matches!(err, Error::Endpoint { kind: EndpointError::Timeout, range } if range == (0..2)));
}

#[test]
fn health_checks() {
    let (addr, _) = spawn_mock();
    let h = healthcheck(&endpoint(addr, "const")).unwrap();
    assert_eq!((h.model_id.as_str(), h.n_classes), ("const", 2));
    assert!(matches!(
        healthcheck(&endpoint(addr, "three")),
        Err(Error::Incompatible(_))
    ));

    let dead = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = dead.local_addr().unwrap().port();
    drop(dead);
    let e = ModelEndpoint::new(format!("http://127.0.0.1:{port}"), "gone");
    assert!(matches!(healthcheck(&e), Err(Error::Unreachable(_))));
}

#[test]
fn http_model_is_a_text_model() {
    let (addr, _) = spawn_mock();
    let m = HttpModel::new(endpoint(addr, "echo")).unwrap();
    assert_eq!(m.input_kind(), InputKind::Raw);
    assert_eq!(m.model_id(), "echo");
    let rows = m.predict_proba_texts(&["wahre".into()]).unwrap();
    assert_eq!(rows, vec![[0.1, 0.9]]);
}

#[test]
fn empty_input_rejected() {
    let e = ModelEndpoint::new("http://127.0.0.1:9", "x");
    assert!(matches!(remote_predict_proba(&e, &[]), Err(Error::Precondition(_))));
    assert!(matches!(
        remote_predict_proba(&e, &["  ".into()]),
        Err(Error::Precondition(_))
    ));
}
