//! Run configuration: one JSON document, overridable by flags. The fully
//! resolved form (defaults filled in, preprocessing inlined, output paths
//! dropped) is echoed into every artifact and can be fed back with
//! `--config` to reproduce the run.
//!
//! Paths inside a config file are used as given, i.e. relative to the
//! working directory, so that an echoed config replays from the same place.

use std::path::{Path, PathBuf};

use sarcalab::blackbox::ModelEndpoint;
use sarcalab::classifiers::{Algorithm, ModelSpec};
use sarcalab::corpus::{DataFormat, SplitSpec};
use sarcalab::features::TfidfConfig;
use sarcalab::lime::LimeConfig;
use sarcalab::preprocess::PipelineConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }
}

impl SplitFractions {
    pub fn spec(self, seed: u64) -> CliResult<SplitSpec> {
        Ok(SplitSpec::new(self.train, self.val, self.test, seed)?)
    }
}

impl std::str::FromStr for SplitFractions {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [train, val, test] => Ok(SplitFractions { train, val, test }),
            _ => Err(format!("expected TRAIN,VAL,TEST fractions, got {s:?}")),
        }
    }
}

/// Which records of the dataset to evaluate on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    #[default]
    All,
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<DataFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocess: Option<PipelineConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocess_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tfidf: Option<TfidfConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<ModelEndpoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitFractions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part: Option<Part>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lime: Option<LimeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output location; never echoed.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    /// HTML output of `explain`; never echoed.
    #[serde(default, skip_serializing)]
    pub html: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    /// Reads a config file. Artifacts written by the CLI are accepted too:
    /// their embedded `config` is used.
    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut v: serde_json::Value = serde_json::from_str(&raw)
            .map_err(|e| CliError::config(format!("config {} is not JSON: {e}", path.display())))?;
        if v.get("format_version").is_some() {
            if let Some(c) = v.get_mut("config") {
                v = c.take();
            }
        }
        serde_json::from_value(v).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `top` win over fields set in `self`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        let base = self;
        overlay!(base, top; data, format, preprocess, preprocess_file, tfidf, model, endpoint,
            model_dir, model_id, split, k, part, lime, text, seed, out, html)
    }

    /// Inlines `preprocess_file` (or the default pipeline) into `preprocess`.
    pub fn resolve_preprocess(&mut self) -> CliResult<()> {
        match (self.preprocess.is_some(), self.preprocess_file.take()) {
            (true, Some(_)) => Err(CliError::config(
                "give either `preprocess` or `preprocess_file`, not both",
            )),
            (false, Some(p)) => {
                self.preprocess = Some(
                    PipelineConfig::from_json_file(&p)
                        .map_err(|e| CliError::from(e).context(format!("preprocessing config {}", p.display())))?,
                );
                Ok(())
            }
            (true, None) => Ok(()),
            (false, None) => {
                self.preprocess = Some(PipelineConfig::default());
                Ok(())
            }
        }
    }

    pub fn require_data(&self) -> CliResult<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| CliError::config("no dataset given (--data or `data`)"))
    }

    pub fn data_format(&self) -> CliResult<DataFormat> {
        Ok(self
            .format
            .unwrap_or_else(|| DataFormat::from_path(self.require_data().unwrap_or(Path::new("")))))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Exactly one of {algorithm, endpoint}.
    pub fn model_source(&self) -> CliResult<ModelSource<'_>> {
        match (&self.model, &self.endpoint) {
            (Some(m), None) => Ok(ModelSource::Algorithm(m)),
            (None, Some(e)) => Ok(ModelSource::Endpoint(e)),
            (Some(_), Some(_)) => Err(CliError::config(
                "exactly one of {algorithm, endpoint} may be given, got both",
            )),
            (None, None) => Err(CliError::config(
                "exactly one of {algorithm, endpoint} is required, got neither",
            )),
        }
    }

    /// Exactly one of {trained model directory, endpoint}.
    pub fn trained_source(&self) -> CliResult<TrainedSource<'_>> {
        if self.model.is_some() {
            return Err(CliError::config(
                "this command uses a trained model (--model DIR) or an endpoint, not an algorithm",
            ));
        }
        match (&self.model_dir, &self.endpoint) {
            (Some(d), None) => Ok(TrainedSource::Dir(d)),
            (None, Some(e)) => Ok(TrainedSource::Endpoint(e)),
            (Some(_), Some(_)) => Err(CliError::config(
                "exactly one of {model directory, endpoint} may be given",
            )),
            (None, None) => Err(CliError::config(
                "a model directory (--model) or an endpoint (--endpoint) is required",
            )),
        }
    }

    pub fn default_model_id(&self) -> String {
        if let Some(id) = &self.model_id {
            return id.clone();
        }
        match (&self.model, &self.endpoint) {
            (Some(m), _) => m.algorithm().name().to_string(),
            (None, Some(e)) => e.model_id.clone(),
            _ => "model".to_string(),
        }
    }

    /// The config as echoed into artifacts.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("run config serializes")
    }
}

pub enum ModelSource<'a> {
    Algorithm(&'a ModelSpec),
    Endpoint(&'a ModelEndpoint),
}

pub enum TrainedSource<'a> {
    Dir(&'a Path),
    Endpoint(&'a ModelEndpoint),
}

/// Applies `--algo` and `--params` to the spec from the config file: the
/// file's parameters are kept when the algorithm matches, and `params` (a
/// JSON object) overrides individual fields.
pub fn merge_model_spec(
    file: Option<ModelSpec>,
    algo: Option<Algorithm>,
    params: Option<&str>,
) -> CliResult<Option<ModelSpec>> {
    let base = match (file, algo) {
        (Some(f), Some(a)) if f.algorithm() == a => Some(f),
        (_, Some(a)) => Some(a.default_spec()),
        (f, None) => f,
    };
    let Some(params) = params else {
        return Ok(base);
    };
    let Some(base) = base else {
        return Err(CliError::config("--params needs an algorithm (--algo or `model`)"));
    };
    let extra: serde_json::Value =
        serde_json::from_str(params).map_err(|e| CliError::config(format!("--params is not JSON: {e}")))?;
    let serde_json::Value::Object(extra) = extra else {
        return Err(CliError::config("--params must be a JSON object"));
    };
    let mut v = serde_json::to_value(base).expect("model spec serializes");
    let obj = v.as_object_mut().expect("model spec is an object");
    for (k, val) in extra {
        if k == "algorithm" {
            return Err(CliError::config("set the algorithm with --algo, not --params"));
        }
        obj.insert(k, val);
    }
    let spec: ModelSpec =
        serde_json::from_value(v).map_err(|e| CliError::config(format!("invalid hyperparameters: {e}")))?;
    Ok(Some(spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_fraction_parsing() {
        let s: SplitFractions = "0.7, 0.1,0.2".parse().unwrap();
        assert_eq!(
            s,
            SplitFractions {
                train: 0.7,
                val: 0.1,
                test: 0.2
            }
        );
        assert!("0.5,0.5".parse::<SplitFractions>().is_err());
        assert!("a,b,c".parse::<SplitFractions>().is_err());
    }

    #[test]
    fn overlay_prefers_top() {
        let base = RunConfig {
            seed: Some(1),
            k: Some(4),
            ..Default::default()
        };
        let top = RunConfig {
            seed: Some(9),
            ..Default::default()
        };
        let c = base.overlay(top);
        assert_eq!((c.seed, c.k), (Some(9), Some(4)));
    }

    #[test]
    fn params_merge() {
        let spec = merge_model_spec(None, Some(Algorithm::RandomForest), Some(r#"{"trees": 7}"#))
            .unwrap()
            .unwrap();
        let v = serde_json::to_value(spec).unwrap();
        assert_eq!(v["trees"], 7);
        assert_eq!(v["algorithm"], "random_forest");
        assert!(merge_model_spec(None, Some(Algorithm::Knn), Some(r#"{"trees": 7}"#)).is_err());
        assert!(merge_model_spec(None, None, Some("{}")).is_err());
        // File parameters survive when the algorithm matches.
        let file = merge_model_spec(None, Some(Algorithm::Knn), Some(r#"{"k_neighbors": 3}"#)).unwrap();
        let kept = merge_model_spec(file, Some(Algorithm::Knn), None).unwrap();
        assert_eq!(serde_json::to_value(kept).unwrap()["k_neighbors"], 3);
    }

    #[test]
    fn echo_drops_output_and_round_trips() {
        let c = RunConfig {
            data: Some("d.csv".into()),
            out: Some("o".into()),
            seed: Some(3),
            model: Some(Algorithm::DecisionTree.default_spec()),
            ..Default::default()
        };
        let v = c.echo();
        assert!(v.get("out").is_none());
        let back: RunConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, RunConfig { out: None, ..c });
    }

    #[test]
    fn source_invariants() {
        let both = RunConfig {
            model: Some(Algorithm::Knn.default_spec()),
            endpoint: Some(ModelEndpoint::new("http://x", "x")),
            ..Default::default()
        };
        assert!(both.model_source().is_err());
        assert!(RunConfig::default().model_source().is_err());
    }
}
