//! Command-line surface. Flags override the `--config` file field by field.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sarcalab::blackbox::ModelEndpoint;
use sarcalab::classifiers::Algorithm;
use sarcalab::corpus::DataFormat;
use sarcalab::lime::TargetClass;

use crate::commands::LimeOverrides;
use crate::config::{merge_model_spec, Part, RunConfig, SplitFractions};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "sarcalab",
    version,
    about = "Train, evaluate and explain sarcasm classifiers"
)]
pub struct Cli {
    /// JSON run config; any artifact written by sarcalab works too.
    #[arg(long, global = true, env = "SARCALAB_CONFIG")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a pipeline on the train part of a split and save it.
    Train(TrainArgs),
    /// Evaluate a saved model or an endpoint and write a report.
    Eval(EvalArgs),
    /// Stratified k-fold cross-validation.
    Kfold(KfoldArgs),
    /// LIME explanation of a single text.
    Explain(ExplainArgs),
    /// Serve predictions, explanations and stored metrics over HTTP.
    Serve(ServeArgs),
    /// Overlay the curves of several reports.
    Report(ReportArgs),
    /// Write a seeded synthetic marker-token corpus as CSV.
    Synth(SynthArgs),
}

fn parse_format(s: &str) -> Result<DataFormat, String> {
    match s {
        "csv" => Ok(DataFormat::Csv),
        "jsonl" => Ok(DataFormat::Jsonl),
        _ => Err(format!("unknown format {s:?}; expected csv or jsonl")),
    }
}

fn parse_algo(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: sarcalab::Error| e.to_string())
}

fn parse_target(s: &str) -> Result<TargetClass, String> {
    let v = match s.parse::<i64>() {
        Ok(i) => serde_json::Value::from(i),
        Err(_) => serde_json::Value::from(s),
    };
    serde_json::from_value(v).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// Labelled comments (CSV with text,label columns, or JSONL).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<DataFormat>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EndpointArgs {
    /// Base URL of a model service exposing /predict and /health.
    #[arg(long, value_name = "URL")]
    pub endpoint: Option<String>,
    #[arg(long, value_name = "MS")]
    pub endpoint_timeout_ms: Option<u64>,
    /// Largest number of texts per request.
    #[arg(long)]
    pub max_batch: Option<usize>,
}

impl EndpointArgs {
    fn apply(&self, base: Option<ModelEndpoint>, model_id: Option<&str>) -> CliResult<Option<ModelEndpoint>> {
        let mut e = match (&self.endpoint, base) {
            (Some(url), Some(mut b)) => {
                b.base_url = url.clone();
                b
            }
            (Some(url), None) => ModelEndpoint::new(url.clone(), model_id.unwrap_or("endpoint")),
            (None, Some(b)) => b,
            (None, None) => {
                if self.endpoint_timeout_ms.is_some() || self.max_batch.is_some() {
                    return Err(CliError::config("--endpoint-timeout-ms/--max-batch need an endpoint"));
                }
                return Ok(None);
            }
        };
        if let Some(t) = self.endpoint_timeout_ms {
            e.timeout_ms = t;
        }
        if let Some(b) = self.max_batch {
            e.max_batch = b;
        }
        if let Some(id) = model_id {
            e.model_id = id.to_string();
        }
        e.validate()?;
        Ok(Some(e))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct AlgoArgs {
    /// One of random_forest, decision_tree, knn, linear_svm, multinomial_nb,
    /// logistic_regression, sgd.
    #[arg(long, value_parser = parse_algo)]
    pub algo: Option<Algorithm>,
    /// Hyperparameter overrides as a JSON object, e.g. '{"trees": 50}'.
    #[arg(long, value_name = "JSON")]
    pub params: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    #[command(flatten)]
    pub data: DataArgs,
    /// Preprocessing config (JSON).
    #[arg(long, value_name = "FILE")]
    pub preprocess: Option<PathBuf>,
    #[arg(long)]
    pub model_id: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (or file, for `explain`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Common {
    fn overlay(&self, file: RunConfig) -> RunConfig {
        let mut file = file;
        if self.preprocess.is_some() {
            // A flag replaces whatever preprocessing the file carried.
            file.preprocess = None;
        }
        file.overlay(RunConfig {
            data: self.data.data.clone(),
            format: self.data.format,
            preprocess_file: self.preprocess.clone(),
            model_id: self.model_id.clone(),
            seed: self.seed,
            out: self.out.clone(),
            ..Default::default()
        })
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub algo: AlgoArgs,
    /// Train/validation/test fractions.
    #[arg(long, value_name = "TRAIN,VAL,TEST")]
    pub split: Option<SplitFractions>,
    #[arg(long, hide = true)]
    pub k: Option<usize>,
    #[arg(long, hide = true)]
    pub endpoint: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Trained model directory.
    #[arg(long, value_name = "DIR")]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
    /// Records to evaluate on; parts are re-derived from the split.
    #[arg(long, value_enum)]
    pub part: Option<Part>,
    #[arg(long, value_name = "TRAIN,VAL,TEST")]
    pub split: Option<SplitFractions>,
    #[arg(long, hide = true)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct KfoldArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub algo: AlgoArgs,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
    /// Number of folds (at least 2).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, hide = true)]
    pub split: Option<SplitFractions>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct LimeArgs {
    /// Number of perturbed samples.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub kernel_width: Option<f64>,
    #[arg(long)]
    pub ridge_lambda: Option<f64>,
    /// Tokens kept in the explanation.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// `predicted`, 0 or 1.
    #[arg(long, value_parser = parse_target)]
    pub target_class: Option<TargetClass>,
}

impl LimeArgs {
    pub fn overrides(&self) -> LimeOverrides {
        LimeOverrides {
            n_samples: self.samples,
            kernel_width: self.kernel_width,
            ridge_lambda: self.ridge_lambda,
            top_k: self.top_k,
            target_class: self.target_class,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_name = "DIR")]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
    #[arg(long, conflicts_with = "text_file")]
    pub text: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub text_file: Option<PathBuf>,
    #[command(flatten)]
    pub lime: LimeArgs,
    /// Also write a highlighted HTML rendering.
    #[arg(long, value_name = "FILE")]
    pub html: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// A trained model directory, optionally named: `[ID=]DIR`. Repeatable.
    #[arg(long = "model", value_name = "[ID=]DIR")]
    pub models: Vec<String>,
    /// A remote model: `ID=URL`. Repeatable.
    #[arg(long = "endpoint", value_name = "ID=URL")]
    pub endpoints: Vec<String>,
    /// Directory whose subdirectories hold metrics.json or report.json.
    #[arg(long, value_name = "DIR")]
    pub runs_dir: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    /// Default LIME seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "MS")]
    pub endpoint_timeout_ms: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// report.json files. Repeatable.
    #[arg(long = "input", value_name = "FILE", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn file_config(path: Option<&PathBuf>) -> CliResult<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

impl TrainArgs {
    pub fn to_config(&self, file: Option<&PathBuf>) -> CliResult<RunConfig> {
        let f = file_config(file)?;
        let model = merge_model_spec(f.model, self.algo.algo, self.algo.params.as_deref())?;
        let mut c = self.common.overlay(f);
        c.model = model;
        c.split = self.split.or(c.split);
        c.k = self.k.or(c.k);
        if let Some(url) = &self.endpoint {
            c.endpoint = Some(ModelEndpoint::new(url.clone(), "endpoint"));
        }
        Ok(c)
    }
}

impl EvalArgs {
    pub fn to_config(&self, file: Option<&PathBuf>) -> CliResult<RunConfig> {
        let f = file_config(file)?;
        let mut c = self.common.overlay(f);
        c.endpoint = self.endpoint.apply(c.endpoint.take(), c.model_id.as_deref())?;
        c.model_dir = self.model.clone().or(c.model_dir);
        c.part = self.part.or(c.part);
        c.split = self.split.or(c.split);
        c.k = self.k.or(c.k);
        // A training artifact used as config carries the algorithm; `eval`
        // works on the trained result instead.
        if self.model.is_some() || self.endpoint.endpoint.is_some() {
            c.model = None;
        }
        Ok(c)
    }
}

impl KfoldArgs {
    pub fn to_config(&self, file: Option<&PathBuf>) -> CliResult<RunConfig> {
        let f = file_config(file)?;
        let model = merge_model_spec(f.model, self.algo.algo, self.algo.params.as_deref())?;
        let mut c = self.common.overlay(f);
        c.endpoint = self.endpoint.apply(c.endpoint.take(), c.model_id.as_deref())?;
        c.model = model;
        c.k = self.k.or(c.k);
        c.split = self.split.or(c.split);
        Ok(c)
    }
}

impl ExplainArgs {
    pub fn to_config(&self, file: Option<&PathBuf>) -> CliResult<RunConfig> {
        let f = file_config(file)?;
        let mut c = self.common.overlay(f);
        c.endpoint = self.endpoint.apply(c.endpoint.take(), c.model_id.as_deref())?;
        c.model_dir = self.model.clone().or(c.model_dir);
        if self.model.is_some() || self.endpoint.endpoint.is_some() {
            c.model = None;
        }
        let text = match (&self.text, &self.text_file) {
            (Some(t), _) => Some(t.clone()),
            (None, Some(p)) => Some(
                std::fs::read_to_string(p)
                    .map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display())))?
                    .trim_end_matches(['\n', '\r'])
                    .to_string(),
            ),
            (None, None) => None,
        };
        c.text = text.or(c.text);
        let o = self.lime.overrides();
        if !o.is_empty() || c.lime.is_none() {
            c.lime = Some(o.apply(c.lime.unwrap_or_default()));
        }
        c.html = self.html.clone().or(c.html);
        Ok(c)
    }
}
