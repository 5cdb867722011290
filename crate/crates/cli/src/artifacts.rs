//! Files the CLI writes. Every JSON artifact is an envelope
//! `{format_version, kind, config, seed, payload}` so that the effective
//! configuration travels with the data it produced.
//!
//! A model directory holds `preprocess.json`, `vectorizer.json`,
//! `model.json`, `run.json` and `metrics.json`.

use std::path::{Path, PathBuf};

use sarcalab::classifiers::TrainedModel;
use sarcalab::features::TfidfModel;
use sarcalab::pipeline::NativePipeline;
use sarcalab::preprocess::PipelineConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub format_version: u32,
    pub kind: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub payload: serde_json::Value,
}

impl Envelope {
    pub fn new(kind: &str, config: &RunConfig, payload: serde_json::Value) -> Self {
        Envelope {
            format_version: ARTIFACT_FORMAT_VERSION,
            kind: kind.to_string(),
            config: config.echo(),
            seed: config.seed(),
            payload,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("envelope serializes") + "\n"
    }

    pub fn read(path: &Path, kind: &str) -> CliResult<Envelope> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::runtime(format!("cannot read {}: {e}", path.display())))?;
        let env: Envelope = serde_json::from_str(&raw)
            .map_err(|e| CliError::runtime(format!("{} is not a sarcalab artifact: {e}", path.display())))?;
        if env.format_version != ARTIFACT_FORMAT_VERSION {
            return Err(CliError::config(format!(
                "{}: unsupported artifact version {}",
                path.display(),
                env.format_version
            )));
        }
        if env.kind != kind {
            return Err(CliError::runtime(format!(
                "{}: expected a {kind} artifact, found {}",
                path.display(),
                env.kind
            )));
        }
        Ok(env)
    }

    pub fn payload_as<T: DeserializeOwned>(&self, path: &Path) -> CliResult<T> {
        serde_json::from_value(self.payload.clone())
            .map_err(|e| CliError::runtime(format!("{}: malformed payload: {e}", path.display())))
    }
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn write_envelope(path: &Path, env: &Envelope) -> CliResult<()> {
    write_file(path, &env.to_json())
}

fn parse_json(s: String) -> serde_json::Value {
    serde_json::from_str(&s).expect("core serializer emits JSON")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub model_id: String,
    pub algorithm: String,
    pub n_features: usize,
    pub dataset: String,
    /// Record counts of the whole dataset and of each split part:
    /// `[total, non-sarcastic, sarcastic]`.
    pub counts: std::collections::BTreeMap<String, [usize; 3]>,
}

/// Writes preprocess/vectorizer/model/run files of a trained pipeline.
pub fn save_model_dir(
    dir: &Path,
    cfg: &RunConfig,
    p: &NativePipeline,
    summary: &RunSummary,
) -> CliResult<Vec<PathBuf>> {
    let files = [
        (
            "preprocess.json",
            "preprocess",
            serde_json::to_value(p.preprocess_config()).expect("serializes"),
        ),
        ("vectorizer.json", "vectorizer", parse_json(p.vectorizer().to_json()?)),
        ("model.json", "model", parse_json(p.model().to_json()?)),
        ("run.json", "run", serde_json::to_value(summary).expect("serializes")),
    ];
    let mut written = Vec::new();
    for (name, kind, payload) in files {
        let path = dir.join(name);
        write_envelope(&path, &Envelope::new(kind, cfg, payload))?;
        written.push(path);
    }
    Ok(written)
}

pub struct LoadedModel {
    pub pipeline: NativePipeline,
    /// The training run's effective config.
    pub run_config: RunConfig,
    pub summary: RunSummary,
}

/// Loads a model directory; `id` overrides the model id recorded at training.
pub fn load_model_dir(dir: &Path, id: Option<&str>) -> CliResult<LoadedModel> {
    let ctx = |e: CliError| e.context(format!("model directory {}", dir.display()));
    let read = |name: &str, kind: &str| {
        let path = dir.join(name);
        Envelope::read(&path, kind).map(|e| (e, path))
    };
    let (pre_env, pre_path) = read("preprocess.json", "preprocess").map_err(ctx)?;
    let preprocess: PipelineConfig = pre_env.payload_as(&pre_path).map_err(ctx)?;
    let (vec_env, _) = read("vectorizer.json", "vectorizer").map_err(ctx)?;
    let vectorizer = TfidfModel::from_json(&vec_env.payload.to_string()).map_err(|e| ctx(e.into()))?;
    let (model_env, _) = read("model.json", "model").map_err(ctx)?;
    let model = TrainedModel::from_json(&model_env.payload.to_string()).map_err(|e| ctx(e.into()))?;
    let (run_env, run_path) = read("run.json", "run").map_err(ctx)?;
    let summary: RunSummary = run_env.payload_as(&run_path).map_err(ctx)?;
    let run_config: RunConfig = serde_json::from_value(run_env.config.clone())
        .map_err(|e| ctx(CliError::runtime(format!("run.json config: {e}"))))?;
    let id = id.map(str::to_string).unwrap_or_else(|| summary.model_id.clone());
    let pipeline = NativePipeline::from_parts(id, preprocess, vectorizer, model).map_err(|e| ctx(e.into()))?;
    Ok(LoadedModel {
        pipeline,
        run_config,
        summary,
    })
}
