//! Text-in, probabilities-out models.
//!
//! [`TextModel`] is the common surface the evaluation harness and the
//! explainer work against. [`NativePipeline`] chains preprocessing, TF-IDF
//! and a [`TrainedModel`]; remote endpoints implement the same trait.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::classifiers::{self, Hyperparams, ProbaRow, TrainedModel};
use crate::corpus::Label;
use crate::error::Result;
use crate::features::{SparseVector, TfidfConfig, TfidfModel};
use crate::preprocess::{preprocess, PipelineConfig, TokenSequence};

/// What a model expects to receive as text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// The model runs the shared preprocessing itself; explanations perturb
    /// preprocessed tokens.
    Preprocessed,
    /// The model owns its tokenization; explanations perturb whitespace
    /// tokens of the raw text.
    Raw,
}

pub trait TextModel: Send + Sync {
    fn model_id(&self) -> &str;

    fn input_kind(&self) -> InputKind;

    /// One `[p(0), p(1)]` row per text, in input order.
    fn predict_proba_texts(&self, texts: &[String]) -> Result<Vec<ProbaRow>>;
}

/// Everything needed to fit a native pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NativeSpec {
    pub preprocess: PipelineConfig,
    pub tfidf: TfidfConfig,
    pub hyperparams: Hyperparams,
}

#[derive(Debug, Clone)]
pub struct NativePipeline {
    id: String,
    preprocess: PipelineConfig,
    vectorizer: TfidfModel,
    model: TrainedModel,
}

fn nfc(s: &str) -> String {
    s.nfc().collect()
}

impl NativePipeline {
    pub fn fit<S: AsRef<str>>(
        id: impl Into<String>,
        texts: &[S],
        labels: &[Label],
        spec: &NativeSpec,
    ) -> Result<NativePipeline> {
        let docs: Vec<TokenSequence> = texts
            .iter()
            .map(|t| preprocess(&nfc(t.as_ref()), &spec.preprocess))
            .collect();
        let vectorizer = TfidfModel::fit(&docs, &spec.tfidf)?;
        let x = vectorizer.transform_all(&docs);
        let model = classifiers::train(&x, labels, &spec.hyperparams)?;
        Ok(NativePipeline {
            id: id.into(),
            preprocess: spec.preprocess.clone(),
            vectorizer,
            model,
        })
    }

    pub fn from_parts(
        id: impl Into<String>,
        preprocess: PipelineConfig,
        vectorizer: TfidfModel,
        model: TrainedModel,
    ) -> Result<NativePipeline> {
        if vectorizer.dim() != model.n_features() {
            return Err(crate::Error::DimensionMismatch {
                expected: vectorizer.dim(),
                found: model.n_features(),
            });
        }
        Ok(NativePipeline {
            id: id.into(),
            preprocess,
            vectorizer,
            model,
        })
    }

    pub fn preprocess_config(&self) -> &PipelineConfig {
        &self.preprocess
    }

    pub fn vectorizer(&self) -> &TfidfModel {
        &self.vectorizer
    }

    pub fn model(&self) -> &TrainedModel {
        &self.model
    }

    pub fn tokens(&self, text: &str) -> TokenSequence {
        preprocess(&nfc(text), &self.preprocess)
    }

    pub fn featurize<S: AsRef<str>>(&self, texts: &[S]) -> Vec<SparseVector> {
        texts
            .iter()
            .map(|t| self.vectorizer.transform(&self.tokens(t.as_ref())))
            .collect()
    }

    pub fn predict<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<Label>> {
        self.model.predict(&self.featurize(texts))
    }
}

impl TextModel for NativePipeline {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn input_kind(&self) -> InputKind {
        InputKind::Preprocessed
    }

    fn predict_proba_texts(&self, texts: &[String]) -> Result<Vec<ProbaRow>> {
        self.model.predict_proba(&self.featurize(texts))
    }
}

impl<T: TextModel + ?Sized> TextModel for &T {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn input_kind(&self) -> InputKind {
        (**self).input_kind()
    }

    fn predict_proba_texts(&self, texts: &[String]) -> Result<Vec<ProbaRow>> {
        (**self).predict_proba_texts(texts)
    }
}

impl<T: TextModel + ?Sized> TextModel for std::sync::Arc<T> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn input_kind(&self) -> InputKind {
        (**self).input_kind()
    }

    fn predict_proba_texts(&self, texts: &[String]) -> Result<Vec<ProbaRow>> {
        (**self).predict_proba_texts(texts)
    }
}

/// A model defined by a closure over raw texts, handy for scripted mocks.
pub struct FnModel<F> {
    id: String,
    kind: InputKind,
    f: F,
}

impl<F> FnModel<F>
where
    F: Fn(&str) -> ProbaRow + Send + Sync,
{
    pub fn new(id: impl Into<String>, kind: InputKind, f: F) -> Self {
        FnModel { id: id.into(), kind, f }
    }
}

impl<F> TextModel for FnModel<F>
where
    F: Fn(&str) -> ProbaRow + Send + Sync,
{
    fn model_id(&self) -> &str {
        &self.id
    }

    fn input_kind(&self) -> InputKind {
        self.kind
    }

    fn predict_proba_texts(&self, texts: &[String]) -> Result<Vec<ProbaRow>> {
        Ok(texts.iter().map(|t| (self.f)(t)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::Algorithm;
    use crate::corpus::synthetic_marker_corpus;

    #[test]
    fn native_pipeline_fits_and_predicts() {
        let d = synthetic_marker_corpus(80, 2);
        let spec = NativeSpec {
            preprocess: PipelineConfig::default(),
            tfidf: TfidfConfig::default(),
            hyperparams: Hyperparams::defaults(Algorithm::MultinomialNb, 0),
        };
        let p = NativePipeline::fit("nb", &d.texts(), &d.labels(), &spec).unwrap();
        let pred = p.predict(&d.texts()).unwrap();
        let acc = pred.iter().zip(d.labels()).filter(|(a, b)| **a == *b).count();
        assert!(acc as f64 / d.len() as f64 > 0.95);
        let rows = p
            .predict_proba_texts(&["wahre bhai".to_string(), "শুধু".to_string()])
            .unwrap();
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn mismatched_parts_rejected() {
        let v = crate::features::fit_tfidf(&[TokenSequence::from_tokens(["a", "b"])]).unwrap();
        let m = TrainedModel::logistic_from_parts(vec![0.0; 3], 0.0);
        assert!(NativePipeline::from_parts("x", PipelineConfig::default(), v, m).is_err());
    }
}
