//! LIME for text: perturb one instance by dropping distinct tokens, query the
//! model on every perturbation, and fit a proximity-weighted ridge surrogate
//! over the binary presence vector. Surrogate coefficients are the token
//! attributions; positive always means "pushes toward class 1".

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::classifiers::{argmax, ProbaRow};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::pipeline::{InputKind, TextModel};
use crate::preprocess::{preprocess, PipelineConfig};

/// Class whose probability the surrogate is fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "TargetRepr", into = "TargetRepr")]
pub enum TargetClass {
    #[default]
    Predicted,
    Class(Label),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TargetRepr {
    Word(String),
    Index(i64),
}

impl TryFrom<TargetRepr> for TargetClass {
    type Error = String;

    fn try_from(r: TargetRepr) -> std::result::Result<Self, String> {
        match r {
            TargetRepr::Word(w) if w == "predicted" => Ok(TargetClass::Predicted),
            TargetRepr::Word(w) => Err(format!("target_class must be 0, 1 or \"predicted\", got {w:?}")),
            TargetRepr::Index(i) => Label::try_from(i).map(TargetClass::Class).map_err(|e| e.to_string()),
        }
    }
}

impl From<TargetClass> for TargetRepr {
    fn from(t: TargetClass) -> TargetRepr {
        match t {
            TargetClass::Predicted => TargetRepr::Word("predicted".into()),
            TargetClass::Class(l) => TargetRepr::Index(l.index() as i64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimeConfig {
    pub n_samples: usize,
    pub kernel_width: f64,
    pub ridge_lambda: f64,
    pub top_k: usize,
    pub seed: u64,
    pub target_class: TargetClass,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            n_samples: 1000,
            kernel_width: 0.25,
            ridge_lambda: 1.0,
            top_k: 10,
            seed: 0,
            target_class: TargetClass::Predicted,
        }
    }
}

impl LimeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 10 {
            return Err(Error::config(format!(
                "n_samples must be at least 10, got {}",
                self.n_samples
            )));
        }
        if !(self.kernel_width > 0.0 && self.kernel_width.is_finite()) {
            return Err(Error::config("kernel_width must be positive"));
        }
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::config("ridge_lambda must be non-negative"));
        }
        if self.top_k == 0 {
            return Err(Error::config("top_k must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSample {
    /// One flag per distinct token; `true` keeps the token.
    pub mask: Vec<bool>,
    pub rendered_text: String,
    pub proximity_weight: f64,
}

/// Distinct tokens in order of first appearance, and the distinct index of
/// every position of `tokens`.
pub fn distinct_tokens<S: AsRef<str>>(tokens: &[S]) -> (Vec<String>, Vec<usize>) {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut distinct = Vec::new();
    let positions = tokens
        .iter()
        .map(|t| {
            *seen.entry(t.as_ref()).or_insert_with(|| {
                distinct.push(t.as_ref().to_string());
                distinct.len() - 1
            })
        })
        .collect();
    (distinct, positions)
}

/// `exp(-d^2 / w^2)` where `d` is the cosine distance between the mask and
/// the all-ones vector, `1 - sqrt(kept / total)`.
pub fn proximity(kept: usize, total: usize, kernel_width: f64) -> f64 {
    let d = 1.0 - (kept as f64 / total as f64).sqrt();
    (-(d * d) / (kernel_width * kernel_width)).exp()
}

fn render<S: AsRef<str>>(tokens: &[S], positions: &[usize], mask: &[bool]) -> String {
    tokens
        .iter()
        .zip(positions)
        .filter(|(_, &p)| mask[p])
        .map(|(t, _)| t.as_ref())
        .collect::<Vec<_>>()
        .join(" ")
}

fn sample_from_mask<S: AsRef<str>>(
    tokens: &[S],
    positions: &[usize],
    mask: Vec<bool>,
    width: f64,
) -> PerturbationSample {
    let kept = mask.iter().filter(|&&b| b).count();
    PerturbationSample {
        rendered_text: render(tokens, positions, &mask),
        proximity_weight: proximity(kept, mask.len(), width),
        mask,
    }
}

/// `cfg.n_samples` perturbations: the unperturbed instance first, then masks
/// that each drop a uniformly drawn number (1..=D) of distinct tokens.
pub fn sample_perturbations<S: AsRef<str>>(tokens: &[S], cfg: &LimeConfig) -> Result<Vec<PerturbationSample>> {
    cfg.validate()?;
    let (distinct, positions) = distinct_tokens(tokens);
    let d = distinct.len();
    if d == 0 {
        return Err(Error::precondition("cannot perturb an instance without tokens"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.n_samples);
    out.push(sample_from_mask(tokens, &positions, vec![true; d], cfg.kernel_width));
    for _ in 1..cfg.n_samples {
        let remove = rng.random_range(1..=d);
        let mut mask = vec![true; d];
        for i in rand::seq::index::sample(&mut rng, d, remove) {
            mask[i] = false;
        }
        out.push(sample_from_mask(tokens, &positions, mask, cfg.kernel_width));
    }
    Ok(out)
}

/// All `2^D` masks, the all-ones mask first. `D` is capped at 20.
pub fn exhaustive_perturbations<S: AsRef<str>>(tokens: &[S], kernel_width: f64) -> Result<Vec<PerturbationSample>> {
    let (distinct, positions) = distinct_tokens(tokens);
    let d = distinct.len();
    if d == 0 || d > 20 {
        return Err(Error::precondition(format!(
            "exhaustive enumeration needs 1..=20 distinct tokens, got {d}"
        )));
    }
    let full = (1u32 << d) - 1;
    Ok((0..=full)
        .rev()
        .map(|m| {
            let mask = (0..d).map(|j| m >> j & 1 == 1).collect();
            sample_from_mask(tokens, &positions, mask, kernel_width)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub r2: f64,
    /// Identical masks or constant targets: nothing to explain.
    pub degenerate: bool,
}

/// Solves `a x = b` for symmetric positive semi-definite `a` (row-major,
/// `n x n`) by Cholesky. Pivots that vanish (linearly dependent columns
/// without ridge) pin the corresponding coefficient to zero.
fn cholesky_solve(mut a: Vec<f64>, b: &[f64], n: usize) -> Vec<f64> {
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max).max(1.0);
    let tiny = 1e-12 * scale;
    let mut active = vec![true; n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= tiny {
            active[j] = false;
            for i in j..n {
                a[i * n + j] = 0.0;
            }
            continue;
        }
        let l = d.sqrt();
        a[j * n + j] = l;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / l;
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        if !active[i] {
            continue;
        }
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * y[k];
        }
        y[i] = s / a[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        if !active[i] {
            continue;
        }
        let mut s = y[i];
        for k in i + 1..n {
            s -= a[k * n + i] * x[k];
        }
        x[i] = s / a[i * n + i];
    }
    x
}

/// Weighted ridge with an unpenalized intercept, restricted to `support`.
/// Returns (coefficients over all columns, intercept).
fn weighted_ridge(x: &[Vec<f64>], w: &[f64], y: &[f64], lambda: f64, support: &[usize]) -> (Vec<f64>, f64) {
    let p = x[0].len();
    let sw: f64 = w.iter().sum();
    let ybar = w.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sw;
    let xbar: Vec<f64> = support
        .iter()
        .map(|&j| x.iter().zip(w).map(|(r, wi)| wi * r[j]).sum::<f64>() / sw)
        .collect();
    let m = support.len();
    let mut a = vec![0.0; m * m];
    let mut b = vec![0.0; m];
    for ((row, &wi), &yi) in x.iter().zip(w).zip(y) {
        let c: Vec<f64> = support.iter().zip(&xbar).map(|(&j, xb)| row[j] - xb).collect();
        let yc = yi - ybar;
        for r in 0..m {
            let wr = wi * c[r];
            b[r] += wr * yc;
            for s in 0..=r {
                a[r * m + s] += wr * c[s];
            }
        }
    }
    for r in 0..m {
        for s in 0..r {
            a[s * m + r] = a[r * m + s];
        }
        a[r * m + r] += lambda;
    }
    let beta = cholesky_solve(a, &b, m);
    let mut full = vec![0.0; p];
    for (&j, &v) in support.iter().zip(&beta) {
        full[j] = v;
    }
    let intercept = ybar - beta.iter().zip(&xbar).map(|(b, x)| b * x).sum::<f64>();
    (full, intercept)
}

fn weighted_r2(x: &[Vec<f64>], w: &[f64], y: &[f64], beta: &[f64], intercept: f64) -> f64 {
    let sw: f64 = w.iter().sum();
    let ybar = w.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sw;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for ((row, &wi), &yi) in x.iter().zip(w).zip(y) {
        let pred = intercept + row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
        ss_res += wi * (yi - pred) * (yi - pred);
        ss_tot += wi * (yi - ybar) * (yi - ybar);
    }
    (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
}

/// Minimizes `sum_i w_i (y_i - b.m_i - b0)^2 + lambda |b|^2`, keeps the
/// `top_k` largest coefficients by magnitude (ties to the lower index) and
/// refits on that support. `r2` is the weighted R^2 of the final fit.
pub fn fit_local(masks: &[Vec<bool>], weights: &[f64], targets: &[f64], cfg: &LimeConfig) -> Result<LocalFit> {
    let n = masks.len();
    if n < 2 {
        return Err(Error::precondition("local fit needs at least two samples"));
    }
    if weights.len() != n || targets.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if weights.len() != n {
                weights.len()
            } else {
                targets.len()
            },
        });
    }
    let p = masks[0].len();
    if let Some(i) = masks.iter().position(|m| m.len() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: masks[i].len(),
        });
    }
    if let Some(i) = weights
        .iter()
        .zip(targets)
        .position(|(w, y)| !(w.is_finite() && *w >= 0.0) || !y.is_finite())
    {
        return Err(Error::NonFinite { sample: i });
    }
    let sw: f64 = weights.iter().sum();
    if sw <= 0.0 {
        return Err(Error::precondition("all proximity weights are zero"));
    }
    let ybar = weights.iter().zip(targets).map(|(a, b)| a * b).sum::<f64>() / sw;
    let identical = masks.iter().all(|m| *m == masks[0]);
    let constant = targets.iter().all(|&y| y == targets[0]);
    if identical || constant {
        return Ok(LocalFit {
            weights: vec![0.0; p],
            intercept: ybar,
            r2: 0.0,
            degenerate: true,
        });
    }
    let x: Vec<Vec<f64>> = masks
        .iter()
        .map(|m| m.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
        .collect();
    let all: Vec<usize> = (0..p).collect();
    let (mut beta, mut intercept) = weighted_ridge(&x, weights, targets, cfg.ridge_lambda, &all);
    if beta.iter().filter(|b| **b != 0.0).count() > cfg.top_k {
        let mut order = all.clone();
        order.sort_by(|&a, &b| beta[b].abs().total_cmp(&beta[a].abs()).then(a.cmp(&b)));
        let mut support = order[..cfg.top_k].to_vec();
        support.sort_unstable();
        (beta, intercept) = weighted_ridge(&x, weights, targets, cfg.ridge_lambda, &support);
    }
    let r2 = weighted_r2(&x, weights, targets, &beta, intercept);
    Ok(LocalFit {
        weights: beta,
        intercept,
        r2,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub model_id: String,
    /// Distinct tokens, in order of first appearance.
    pub tokens: Vec<String>,
    /// Attribution per distinct token; positive pushes toward class 1.
    pub weights: Vec<f64>,
    /// The full token sequence as distinct-token indices.
    pub sequence: Vec<usize>,
    pub intercept: f64,
    pub r2: f64,
    pub degenerate: bool,
    pub predicted_class: Label,
    /// Model probabilities for the unperturbed text.
    pub probs: ProbaRow,
    pub target_class: Label,
    pub config: LimeConfig,
}

impl Explanation {
    /// (token, weight) per position of the original sequence.
    pub fn token_weights(&self) -> impl Iterator<Item = (&str, f64)> {
        self.sequence
            .iter()
            .map(|&i| (self.tokens[i].as_str(), self.weights[i]))
    }
}

/// Tokens the explanation perturbs: preprocessed tokens for models that
/// share the native preprocessing, whitespace tokens otherwise.
pub fn instance_tokens(text: &str, kind: InputKind, pre: &PipelineConfig) -> Vec<String> {
    let text: String = text.nfc().collect();
    match kind {
        InputKind::Preprocessed => preprocess(&text, pre).into_inner(),
        InputKind::Raw => text.split_whitespace().map(str::to_string).collect(),
    }
}

pub fn explain(text: &str, model: &dyn TextModel, pre: &PipelineConfig, cfg: &LimeConfig) -> Result<Explanation> {
    cfg.validate()?;
    let text: String = text.nfc().collect();
    if text.trim().is_empty() {
        return Err(Error::precondition("text to explain is empty"));
    }
    let tokens = instance_tokens(&text, model.input_kind(), pre);
    if tokens.is_empty() {
        return Err(Error::precondition("text to explain has no tokens after preprocessing"));
    }
    let samples = sample_perturbations(&tokens, cfg)?;
    let mut queries: Vec<String> = Vec::with_capacity(samples.len() + 1);
    queries.push(text);
    queries.extend(samples.iter().map(|s| s.rendered_text.clone()));
    let rows = model.predict_proba_texts(&queries)?;
    if rows.len() != queries.len() {
        return Err(Error::DimensionMismatch {
            expected: queries.len(),
            found: rows.len(),
        });
    }
    let probs = rows[0];
    let predicted_class = argmax(&probs);
    let target_class = match cfg.target_class {
        TargetClass::Predicted => predicted_class,
        TargetClass::Class(l) => l,
    };
    let masks: Vec<Vec<bool>> = samples.iter().map(|s| s.mask.clone()).collect();
    let prox: Vec<f64> = samples.iter().map(|s| s.proximity_weight).collect();
    let targets: Vec<f64> = rows[1..].iter().map(|r| r[target_class.index()]).collect();
    let mut fit = fit_local(&masks, &prox, &targets, cfg)?;
    if !target_class.is_positive() {
        // p0 = 1 - p1: flip into the class-1 convention.
        fit.weights.iter_mut().for_each(|w| *w = -*w);
        fit.intercept = 1.0 - fit.intercept;
    }
    let (distinct, sequence) = distinct_tokens(&tokens);
    Ok(Explanation {
        model_id: model.model_id().to_string(),
        tokens: distinct,
        weights: fit.weights,
        sequence,
        intercept: fit.intercept,
        r2: fit.r2,
        degenerate: fit.degenerate,
        predicted_class,
        probs,
        target_class,
        config: *cfg,
    })
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Self-contained HTML fragment: one inline-styled span per weighted token,
/// orange for class 1 (sarcasm) and blue for class 0, opacity proportional
/// to `|w| / max |w|`. Zero-weight tokens are plain text.
pub fn explanation_html(e: &Explanation) -> String {
    let max = e.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let mut parts = Vec::with_capacity(e.sequence.len());
    for (tok, w) in e.token_weights() {
        let tok = html_escape(tok);
        if w == 0.0 || max == 0.0 {
            parts.push(tok);
            continue;
        }
        let alpha = w.abs() / max;
        let rgb = if w > 0.0 { "255,140,0" } else { "30,144,255" };
        let class = if w > 0.0 { "pos" } else { "neg" };
        parts.push(format!(
            r#"<span class="lime-{class}" title="{w:+.4}" style="background-color:rgba({rgb},{alpha:.3})">{tok}</span>"#
        ));
    }
    let config = serde_json::to_string(&e.config).unwrap_or_default();
    format!(
        "<!-- lime config: {config} -->\n<div class=\"lime-explanation\" data-model=\"{}\" data-predicted=\"{}\" data-p1=\"{:.4}\">{}</div>\n",
        html_escape(&e.model_id),
        e.predicted_class.index(),
        e.probs[1],
        parts.join(" ")
    )
}
