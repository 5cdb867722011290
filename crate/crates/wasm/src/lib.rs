//! Browser bindings. A [`Demo`] trains every classifier on a seeded synthetic
//! corpus inside the page, then answers three kinds of questions: what the
//! preprocessing does to a comment, why a model labels it the way it does,
//! and how the models' ROC/PR curves compare on held-out data.
//!
//! Results cross the boundary as JSON or SVG/HTML strings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sarcalab::classifiers::{Algorithm, Hyperparams};
use sarcalab::corpus::{stratified_split, synthetic_marker_corpus, Dataset, Label, SplitSpec};
use sarcalab::eval::{evaluate, render_overlay_svg, CurveKind, ModelEval};
use sarcalab::features::TfidfConfig;
use sarcalab::lime::{explain, explanation_html, LimeConfig};
use sarcalab::pipeline::{NativePipeline, NativeSpec};
use sarcalab::preprocess::{preprocess, remove_emoji, remove_stopwords, tokenize, PipelineConfig};
use serde_json::json;
use unicode_normalization::UnicodeNormalization;
use wasm_bindgen::prelude::*;

type Res<T> = Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Each preprocessing stage applied to `text`, as JSON.
#[wasm_bindgen]
pub fn preprocess_view(text: &str) -> String {
    let cfg = PipelineConfig::default();
    let text: String = text.nfc().collect();
    let no_emoji = remove_emoji(&text, &cfg);
    let tokens = tokenize(&no_emoji);
    let kept = remove_stopwords(&tokens, &cfg);
    let removed: Vec<&str> = tokens
        .iter()
        .filter(|t| !kept.tokens().iter().any(|k| k == t))
        .collect();
    let fin = preprocess(&text, &cfg);
    json!({
        "without_emoji": no_emoji,
        "tokens": tokens,
        "stopwords_removed": removed,
        "final": fin,
    })
    .to_string()
}

#[wasm_bindgen]
pub struct Demo {
    seed: u64,
    test: Dataset,
    models: Vec<(Algorithm, NativePipeline, ModelEval)>,
}

#[wasm_bindgen]
impl Demo {
    /// Trains all seven classifiers on a 60/20/20 split of `n_docs`
    /// synthetic comments, a `label_noise` fraction of which get their label
    /// flipped (the clean corpus is perfectly separable).
    #[wasm_bindgen(constructor)]
    pub fn new(n_docs: usize, seed: u64, label_noise: f64) -> Result<Demo, String> {
        Demo::build(n_docs, seed, label_noise)
    }

    /// Per-model test metrics as JSON.
    pub fn summary(&self) -> String {
        let models: Vec<_> = self
            .models
            .iter()
            .map(|(a, _, e)| {
                json!({
                    "algorithm": a.name(),
                    "accuracy": e.micro.accuracy,
                    "macro_f1": e.macro_.f1,
                    "auc": e.auc,
                    "pr_area": e.pr.area,
                })
            })
            .collect();
        json!({ "seed": self.seed, "n_test": self.test.len(), "models": models }).to_string()
    }

    /// Held-out test comments, for picking an example.
    pub fn examples(&self, n: usize) -> String {
        let rows: Vec<_> = self
            .test
            .records
            .iter()
            .take(n)
            .map(|r| json!({"text": r.text, "label": r.label}))
            .collect();
        serde_json::Value::from(rows).to_string()
    }

    /// LIME explanation JSON with an `html` rendering attached.
    pub fn explain(&self, algorithm: &str, text: &str, n_samples: usize, seed: u64) -> Result<String, String> {
        self.explain_json(algorithm, text, n_samples, seed)
    }

    /// Overlay SVG of the ROC (`kind = "roc"`) or PR curves of the listed
    /// algorithms (comma-separated; empty for all).
    pub fn curves_svg(&self, kind: &str, algorithms: &str) -> Result<String, String> {
        self.svg(kind, algorithms)
    }
}

impl Demo {
    fn build(n_docs: usize, seed: u64, label_noise: f64) -> Res<Demo> {
        if !(0.0..=0.5).contains(&label_noise) {
            return Err(format!("label noise must lie in [0, 0.5], got {label_noise}"));
        }
        let mut d = synthetic_marker_corpus(n_docs, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e6f697365);
        for r in &mut d.records {
            if rng.random_bool(label_noise) {
                r.label = match r.label {
                    Label::Sarcastic => Label::NonSarcastic,
                    Label::NonSarcastic => Label::Sarcastic,
                };
            }
        }
        let (train, _val, test) =
            stratified_split(&d, &SplitSpec::new(0.6, 0.2, 0.2, seed).map_err(err)?).map_err(err)?;
        let mut models = Vec::new();
        for a in Algorithm::ALL {
            let spec = NativeSpec {
                preprocess: PipelineConfig::default(),
                tfidf: TfidfConfig::default(),
                hyperparams: Hyperparams::defaults(a, seed),
            };
            let p = NativePipeline::fit(a.name(), &train.texts(), &train.labels(), &spec).map_err(err)?;
            let e = evaluate(&p, &test).map_err(err)?;
            models.push((a, p, e));
        }
        Ok(Demo { seed, test, models })
    }

    fn find(&self, algorithm: &str) -> Res<&(Algorithm, NativePipeline, ModelEval)> {
        let a: Algorithm = algorithm.parse().map_err(err)?;
        Ok(self
            .models
            .iter()
            .find(|m| m.0 == a)
            .expect("every algorithm is trained"))
    }

    fn explain_json(&self, algorithm: &str, text: &str, n_samples: usize, seed: u64) -> Res<String> {
        let (_, p, _) = self.find(algorithm)?;
        let cfg = LimeConfig {
            n_samples,
            seed,
            ..Default::default()
        };
        let e = explain(text, p, p.preprocess_config(), &cfg).map_err(err)?;
        let mut v = serde_json::to_value(&e).map_err(err)?;
        v["html"] = explanation_html(&e).into();
        Ok(v.to_string())
    }

    fn svg(&self, kind: &str, algorithms: &str) -> Res<String> {
        let kind = match kind {
            "roc" => CurveKind::Roc,
            "pr" => CurveKind::Pr,
            k => return Err(format!("unknown curve kind {k:?}; expected roc or pr")),
        };
        let chosen: Vec<&(Algorithm, NativePipeline, ModelEval)> = if algorithms.trim().is_empty() {
            self.models.iter().collect()
        } else {
            algorithms.split(',').map(|a| self.find(a.trim())).collect::<Res<_>>()?
        };
        let curves: Vec<(&str, &_)> = chosen
            .iter()
            .map(|(a, _, e)| (a.name(), if kind == CurveKind::Roc { &e.roc } else { &e.pr }))
            .collect();
        let meta = json!({ "seed": self.seed, "n_test": self.test.len() }).to_string();
        Ok(render_overlay_svg(kind, &curves, &meta))
    }
}
