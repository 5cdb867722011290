//! TF-IDF vectorizer over preprocessed token sequences.
//!
//! Weights use raw term counts and the smoothed inverse document frequency
//! `ln((1 + N) / (1 + df)) + 1`, optionally followed by L2 normalization.
//! Tokens unseen at fit time are ignored by [`TfidfModel::transform`].

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::TokenSequence;

/// Sparse real vector with strictly increasing indices and non-zero finite
/// values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a vector from `(index, value)` pairs in any order. Duplicate
    /// indices are summed and zeros dropped.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, v) in pairs {
            if i >= dim {
                return Err(Error::precondition(format!(
                    "index {i} out of range for dimension {dim}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::precondition(format!("non-finite value at index {i}")));
            }
            *acc.entry(i).or_insert(0.0) += v;
        }
        let (indices, values) = acc
            .into_iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|(i, v)| (i as u32, v))
            .unzip();
        Ok(SparseVector { dim, indices, values })
    }

    pub fn from_dense(values: &[f64]) -> Result<Self> {
        SparseVector::from_pairs(values.len(), values.iter().copied().enumerate())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().zip(&self.values).map(|(&i, &v)| (i as usize, v))
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&(index as u32)) {
            Ok(p) => self.values[p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut sum = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    sum += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        sum
    }

    /// Dot product with a dense weight vector.
    pub fn dot_dense(&self, w: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * w[i]).sum()
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector {
            dim: self.dim,
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfidfConfig {
    pub normalize: bool,
    /// Minimum document frequency (absolute count) for a token to be kept.
    pub min_df: usize,
    /// Maximum document frequency as a fraction of the corpus.
    pub max_df: f64,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        TfidfConfig {
            normalize: true,
            min_df: 1,
            max_df: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    document_frequency: Vec<usize>,
    n_documents: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn document_frequency(&self, token: &str) -> Option<usize> {
        self.index_of(token).map(|i| self.document_frequency[i])
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }
}

pub const TFIDF_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    vocabulary: Vocabulary,
    idf: Vec<f64>,
    normalize: bool,
}

/// Persisted form; terms are listed in index order.
#[derive(Serialize, Deserialize)]
struct TfidfFile {
    format_version: u32,
    vocabulary: Vec<String>,
    df: Vec<usize>,
    n_documents: usize,
    idf: Vec<f64>,
    normalize: bool,
}

pub fn smoothed_idf(n_documents: usize, df: usize) -> f64 {
    ((1.0 + n_documents as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Fits with the default configuration (L2 normalization, no df pruning).
pub fn fit_tfidf(corpus: &[TokenSequence]) -> Result<TfidfModel> {
    TfidfModel::fit(corpus, &TfidfConfig::default())
}

impl TfidfModel {
    /// Vocabulary indices follow the lexicographic order of the tokens.
    pub fn fit(corpus: &[TokenSequence], cfg: &TfidfConfig) -> Result<TfidfModel> {
        if corpus.is_empty() {
            return Err(Error::precondition("cannot fit TF-IDF on an empty corpus"));
        }
        if corpus.iter().all(TokenSequence::is_empty) {
            return Err(Error::precondition("cannot fit TF-IDF: every document is empty"));
        }
        if !(cfg.max_df > 0.0 && cfg.max_df <= 1.0) {
            return Err(Error::config(format!("max_df must be in (0,1], got {}", cfg.max_df)));
        }
        let n = corpus.len();
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in corpus {
            let mut seen: Vec<&str> = doc.iter().collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let max_count = cfg.max_df * n as f64;
        df.retain(|_, &mut c| c >= cfg.min_df && c as f64 <= max_count);
        if df.is_empty() {
            return Err(Error::config("document-frequency limits removed every token"));
        }
        let terms: Vec<String> = df.keys().map(|t| t.to_string()).collect();
        let document_frequency: Vec<usize> = df.values().copied().collect();
        let idf = document_frequency.iter().map(|&d| smoothed_idf(n, d)).collect();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(TfidfModel {
            vocabulary: Vocabulary {
                terms,
                index,
                document_frequency,
                n_documents: n,
            },
            idf,
            normalize: cfg.normalize,
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn normalizes(&self) -> bool {
        self.normalize
    }

    pub fn idf(&self, token: &str) -> Option<f64> {
        self.vocabulary.index_of(token).map(|i| self.idf[i])
    }

    pub fn transform(&self, doc: &TokenSequence) -> SparseVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in doc.iter() {
            if let Some(i) = self.vocabulary.index_of(t) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        let mut pairs: Vec<(u32, f64)> = counts.into_iter().map(|(i, c)| (i as u32, c * self.idf[i])).collect();
        if self.normalize {
            let norm = pairs.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for p in &mut pairs {
                    p.1 /= norm;
                }
            }
        }
        let (indices, values) = pairs.into_iter().unzip();
        SparseVector {
            dim: self.dim(),
            indices,
            values,
        }
    }

    pub fn transform_all(&self, docs: &[TokenSequence]) -> Vec<SparseVector> {
        docs.iter().map(|d| self.transform(d)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = TfidfFile {
            format_version: TFIDF_FORMAT_VERSION,
            vocabulary: self.vocabulary.terms.clone(),
            df: self.vocabulary.document_frequency.clone(),
            n_documents: self.vocabulary.n_documents,
            idf: self.idf.clone(),
            normalize: self.normalize,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<TfidfModel> {
        let file: TfidfFile = serde_json::from_str(s)?;
        if file.format_version != TFIDF_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                expected: TFIDF_FORMAT_VERSION,
                found: file.format_version,
            });
        }
        let v = file.vocabulary.len();
        if file.df.len() != v || file.idf.len() != v {
            return Err(Error::config("vectorizer file has inconsistent table lengths"));
        }
        if file.df.iter().any(|&d| d == 0 || d > file.n_documents) {
            return Err(Error::config("vectorizer file has out-of-range document frequencies"));
        }
        let index: HashMap<String, usize> = file
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        if index.len() != v {
            return Err(Error::config("vectorizer file has duplicate terms"));
        }
        Ok(TfidfModel {
            vocabulary: Vocabulary {
                terms: file.vocabulary,
                index,
                document_frequency: file.df,
                n_documents: file.n_documents,
            },
            idf: file.idf,
            normalize: file.normalize,
        })
    }
}
