//! Subcommand implementations. Each takes the merged [`RunConfig`], checks
//! the invariants that apply to it, and returns the text to print.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sarcalab::blackbox::HttpModel;
use sarcalab::corpus::{load_dataset, stratified_split_indices, Dataset};
use sarcalab::eval::{evaluate, run_kfold, write_report_files, KfoldSource, ModelEval, Report};
use sarcalab::lime::{explain, explanation_html, LimeConfig};
use sarcalab::pipeline::{NativePipeline, NativeSpec, TextModel};
use sarcalab::preprocess::PipelineConfig;

use crate::artifacts::{load_model_dir, save_model_dir, write_envelope, write_file, Envelope, RunSummary};
use crate::config::{ModelSource, Part, RunConfig, TrainedSource};
use crate::error::{CliError, CliResult};

fn require_out(cfg: &RunConfig) -> CliResult<PathBuf> {
    cfg.out
        .clone()
        .ok_or_else(|| CliError::config("no output location given (--out)"))
}

fn load_data(cfg: &RunConfig) -> CliResult<Dataset> {
    let path = cfg.require_data()?;
    load_dataset(path, cfg.data_format()?).map_err(CliError::from)
}

fn counts(d: &Dataset) -> [usize; 3] {
    let s = d.summary();
    [s.total, s.per_class[0], s.per_class[1]]
}

fn metric_line(out: &mut String, label: &str, e: &ModelEval) {
    let _ = writeln!(
        out,
        "{label}: accuracy {:.4}  macro-F1 {:.4}  AUC {:.4}  (n = {})",
        e.micro.accuracy, e.macro_.f1, e.auc, e.counts.total
    );
}

/// Connects to an endpoint and checks that it serves a binary model.
pub fn connect(endpoint: &sarcalab::blackbox::ModelEndpoint) -> CliResult<HttpModel> {
    let m = HttpModel::new(endpoint.clone())?;
    m.healthcheck()?;
    Ok(m)
}

pub fn train(cfg: RunConfig) -> CliResult<String> {
    if cfg.k.is_some() {
        return Err(CliError::config(
            "exactly one of {split, k} applies: `train` uses a split, pass k to `kfold`",
        ));
    }
    let spec = match cfg.model_source()? {
        ModelSource::Algorithm(s) => *s,
        ModelSource::Endpoint(_) => {
            return Err(CliError::config(
                "`train` needs an algorithm; endpoints are trained elsewhere",
            ))
        }
    };
    spec.validate()?;
    let out = require_out(&cfg)?;
    let mut cfg = cfg;
    cfg.resolve_preprocess()?;
    let split = cfg.split.unwrap_or_default();
    let eff = RunConfig {
        data: Some(cfg.require_data()?.to_path_buf()),
        format: Some(cfg.data_format()?),
        preprocess: cfg.preprocess.clone(),
        tfidf: Some(cfg.tfidf.unwrap_or_default()),
        model: Some(spec),
        model_id: Some(cfg.default_model_id()),
        split: Some(split),
        seed: Some(cfg.seed()),
        ..Default::default()
    };
    let split_spec = split.spec(eff.seed())?;
    let data = load_data(&eff)?;
    let idx = stratified_split_indices(&data, &split_spec)?;
    let parts = [("train", &idx.train), ("val", &idx.val), ("test", &idx.test)]
        .map(|(name, ix)| (name, data.subset(format!("{}-{name}", data.name), ix)));
    let native = NativeSpec {
        preprocess: eff.preprocess.clone().expect("resolved"),
        tfidf: eff.tfidf.expect("resolved"),
        hyperparams: sarcalab::classifiers::Hyperparams::new(spec, eff.seed()),
    };
    let model_id = eff.model_id.clone().expect("resolved");
    let train = &parts[0].1;
    let pipeline = NativePipeline::fit(&model_id, &train.texts(), &train.labels(), &native)?;

    let mut evals = Vec::new();
    for (name, part) in &parts[1..] {
        if part.is_empty() {
            continue;
        }
        let mut e = evaluate(&pipeline, part)?;
        e.model_id = format!("{model_id}@{name}");
        evals.push(e);
    }
    let mut part_counts = BTreeMap::new();
    part_counts.insert("all".to_string(), counts(&data));
    for (name, part) in &parts {
        part_counts.insert(name.to_string(), counts(part));
    }
    let summary = RunSummary {
        model_id: model_id.clone(),
        algorithm: spec.algorithm().name().to_string(),
        n_features: pipeline.vectorizer().dim(),
        dataset: data.name.clone(),
        counts: part_counts,
    };
    save_model_dir(&out, &eff, &pipeline, &summary)?;
    let report = Report::new(eff.echo(), eff.seed(), evals);
    write_file(&out.join("metrics.json"), &report.to_json()?)?;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "trained {model_id} ({}) on {} records, {} features",
        summary.algorithm,
        train.len(),
        summary.n_features
    );
    for e in &report.models {
        metric_line(&mut s, &e.model_id, e);
    }
    Ok(s)
}

pub fn eval(cfg: RunConfig) -> CliResult<String> {
    if cfg.k.is_some() {
        return Err(CliError::config(
            "exactly one of {split, k} applies: `eval` uses a split, pass k to `kfold`",
        ));
    }
    let out = require_out(&cfg)?;
    let part = cfg.part.unwrap_or_default();
    let mut eff = RunConfig {
        data: Some(cfg.require_data()?.to_path_buf()),
        format: Some(cfg.data_format()?),
        part: Some(part),
        ..Default::default()
    };
    let (model, run_cfg): (Box<dyn TextModel>, Option<RunConfig>) = match cfg.trained_source()? {
        TrainedSource::Dir(d) => {
            let loaded = load_model_dir(d, cfg.model_id.as_deref())?;
            eff.model_dir = Some(d.to_path_buf());
            (Box::new(loaded.pipeline), Some(loaded.run_config))
        }
        TrainedSource::Endpoint(e) => {
            eff.endpoint = Some(e.clone());
            eff.model_id = cfg.model_id.clone();
            (Box::new(connect(e)?), None)
        }
    };
    if cfg.model_dir.is_some() {
        eff.model_id = cfg.model_id.clone();
    }
    // The held-out parts are re-derived with the training run's split and
    // seed unless overridden.
    if part != Part::All {
        let inherited = run_cfg.as_ref();
        eff.split = cfg
            .split
            .or(inherited.and_then(|r| r.split))
            .or(Some(Default::default()));
        eff.seed = cfg.seed.or(inherited.and_then(|r| r.seed)).or(Some(0));
    } else {
        eff.seed = Some(cfg.seed());
    }
    let data = load_data(&eff)?;
    let subset = match part {
        Part::All => data,
        p => {
            let idx = stratified_split_indices(&data, &eff.split.expect("set").spec(eff.seed())?)?;
            let ix = match p {
                Part::Train => idx.train,
                Part::Val => idx.val,
                _ => idx.test,
            };
            data.subset(format!("{}-{p:?}", data.name).to_lowercase(), &ix)
        }
    };
    let e = evaluate(model.as_ref(), &subset)?;
    let report = Report::new(eff.echo(), eff.seed(), vec![e]);
    write_report_files(&out, &report)?;
    let mut s = String::new();
    metric_line(&mut s, &report.models[0].model_id, &report.models[0]);
    let _ = writeln!(s, "report written to {}", out.display());
    Ok(s)
}

pub fn kfold(cfg: RunConfig) -> CliResult<String> {
    if cfg.split.is_some() {
        return Err(CliError::config(
            "exactly one of {split, k} applies: `kfold` takes k, not a split",
        ));
    }
    let k = cfg.k.ok_or_else(|| CliError::config("`kfold` needs k (--k)"))?;
    if k < 2 {
        return Err(CliError::config(format!("k must be at least 2 (got {k})")));
    }
    let out = require_out(&cfg)?;
    let mut cfg = cfg;
    let mut eff = RunConfig {
        data: Some(cfg.require_data()?.to_path_buf()),
        format: Some(cfg.data_format()?),
        k: Some(k),
        seed: Some(cfg.seed()),
        model_id: Some(cfg.default_model_id()),
        ..Default::default()
    };
    enum Src {
        Native(NativeSpec),
        Remote(HttpModel),
    }
    let src = match cfg.model_source()? {
        ModelSource::Algorithm(spec) => {
            let spec = *spec;
            spec.validate()?;
            cfg.resolve_preprocess()?;
            eff.preprocess = cfg.preprocess.clone();
            eff.tfidf = Some(cfg.tfidf.unwrap_or_default());
            eff.model = Some(spec);
            Src::Native(NativeSpec {
                preprocess: eff.preprocess.clone().expect("resolved"),
                tfidf: eff.tfidf.expect("set"),
                hyperparams: sarcalab::classifiers::Hyperparams::new(spec, eff.seed()),
            })
        }
        ModelSource::Endpoint(e) => {
            eff.endpoint = Some(e.clone());
            Src::Remote(connect(e)?)
        }
    };
    let data = load_data(&eff)?;
    let source = match &src {
        Src::Native(s) => KfoldSource::Native(s),
        Src::Remote(m) => KfoldSource::External(m),
    };
    let fold = run_kfold(&data, source, k, eff.seed())?;
    let model_id = eff.model_id.clone().expect("set");
    let e = ModelEval::from_kfold(&model_id, &data, fold)?;
    let f = e.kfold.as_ref().expect("attached");
    let mut s = String::new();
    for m in &f.folds {
        let _ = writeln!(
            s,
            "fold {}: accuracy {:.4}  macro-F1 {:.4}  (train {}, test {})",
            m.fold + 1,
            m.micro.accuracy,
            m.macro_.f1,
            m.n_train,
            m.n_test
        );
    }
    let _ = writeln!(
        s,
        "mean accuracy {:.4} ± {:.4}; final fold {:.4}",
        f.micro_mean.accuracy, f.micro_std.accuracy, f.final_fold.accuracy
    );
    let report = Report::new(eff.echo(), eff.seed(), vec![e]);
    write_report_files(&out, &report)?;
    let _ = writeln!(s, "report written to {}", out.display());
    Ok(s)
}

pub fn explain_cmd(cfg: RunConfig) -> CliResult<String> {
    let text = cfg
        .text
        .clone()
        .ok_or_else(|| CliError::config("no text to explain (--text or --text-file)"))?;
    let mut lime = cfg.lime.unwrap_or_default();
    lime.seed = cfg.seed.unwrap_or(lime.seed);
    lime.validate()?;
    let mut eff = RunConfig {
        text: Some(text.clone()),
        lime: Some(lime),
        seed: Some(lime.seed),
        ..Default::default()
    };
    let (model, pre): (Box<dyn TextModel>, PipelineConfig) = match cfg.trained_source()? {
        TrainedSource::Dir(d) => {
            let loaded = load_model_dir(d, cfg.model_id.as_deref())?;
            eff.model_dir = Some(d.to_path_buf());
            let pre = loaded.pipeline.preprocess_config().clone();
            (Box::new(loaded.pipeline), pre)
        }
        TrainedSource::Endpoint(e) => {
            eff.endpoint = Some(e.clone());
            (Box::new(connect(e)?), PipelineConfig::default())
        }
    };
    eff.model_id = cfg.model_id.clone();
    let e = explain(&text, model.as_ref(), &pre, &lime)?;
    let payload = serde_json::to_value(&e).map_err(|err| CliError::runtime(err.to_string()))?;
    let env = Envelope::new("explanation", &eff, payload);
    if let Some(h) = &cfg.html {
        write_file(h, &explanation_html(&e))?;
    }
    match &cfg.out {
        Some(p) => {
            write_envelope(p, &env)?;
            let mut s = String::new();
            let _ = writeln!(s, "predicted class {} (p1 = {:.4})", e.predicted_class, e.probs[1]);
            let mut ranked: Vec<(usize, f64)> = e
                .weights
                .iter()
                .copied()
                .enumerate()
                .filter(|(_, w)| *w != 0.0)
                .collect();
            ranked.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
            for (i, w) in ranked {
                let _ = writeln!(s, "  {:+.4}  {}", w, e.tokens[i]);
            }
            let _ = writeln!(s, "explanation written to {}", p.display());
            Ok(s)
        }
        None => Ok(env.to_json()),
    }
}

/// Overlays the models of several `report.json` files.
pub fn report(inputs: &[PathBuf], out: &Path) -> CliResult<String> {
    if inputs.is_empty() {
        return Err(CliError::config("`report` needs at least one --input report.json"));
    }
    let mut sources = Vec::new();
    let mut models: Vec<ModelEval> = Vec::new();
    let mut seed = None;
    for p in inputs {
        let raw =
            std::fs::read_to_string(p).map_err(|e| CliError::runtime(format!("cannot read {}: {e}", p.display())))?;
        let r = Report::from_json(&raw).map_err(|e| CliError::from(e).context(p.display()))?;
        seed.get_or_insert(r.seed);
        sources.push(serde_json::json!({ "config": r.config, "seed": r.seed }));
        for mut m in r.models {
            let base = m.model_id.clone();
            let mut n = 2;
            while models.iter().any(|x| x.model_id == m.model_id) {
                m.model_id = format!("{base}-{n}");
                n += 1;
            }
            models.push(m);
        }
    }
    let report = Report::new(serde_json::json!({ "sources": sources }), seed.unwrap_or(0), models);
    write_report_files(out, &report)?;
    let mut s = String::new();
    for m in &report.models {
        let _ = writeln!(
            s,
            "{}: ROC area {:.4}, PR area {:.4}",
            m.model_id, m.roc.area, m.pr.area
        );
    }
    let _ = writeln!(s, "overlay written to {}", out.display());
    Ok(s)
}

/// Default LIME settings overridden field by field.
#[derive(Debug, Clone, Default)]
pub struct LimeOverrides {
    pub n_samples: Option<usize>,
    pub kernel_width: Option<f64>,
    pub ridge_lambda: Option<f64>,
    pub top_k: Option<usize>,
    pub target_class: Option<sarcalab::lime::TargetClass>,
}

impl LimeOverrides {
    pub fn is_empty(&self) -> bool {
        self.n_samples.is_none()
            && self.kernel_width.is_none()
            && self.ridge_lambda.is_none()
            && self.top_k.is_none()
            && self.target_class.is_none()
    }

    pub fn apply(&self, mut c: LimeConfig) -> LimeConfig {
        if let Some(v) = self.n_samples {
            c.n_samples = v;
        }
        if let Some(v) = self.kernel_width {
            c.kernel_width = v;
        }
        if let Some(v) = self.ridge_lambda {
            c.ridge_lambda = v;
        }
        if let Some(v) = self.top_k {
            c.top_k = v;
        }
        if let Some(v) = self.target_class {
            c.target_class = v;
        }
        c
    }
}
