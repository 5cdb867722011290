use serde::{Deserialize, Serialize};

use super::{NbParams, ProbaRow};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::SparseVector;

/// Multinomial naive Bayes with additive smoothing. Feature values act as
/// (possibly fractional) counts, so TF-IDF vectors can be fed directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialNb {
    class_log_prior: [f64; 2],
    /// `feature_log_prob[class][feature] = ln P(feature | class)`
    feature_log_prob: [Vec<f64>; 2],
}

impl MultinomialNb {
    pub fn fit(x: &[SparseVector], y: &[Label], p: &NbParams) -> Result<MultinomialNb> {
        let dim = x[0].dim();
        let mut counts = [vec![0.0; dim], vec![0.0; dim]];
        let mut n_class = [0usize; 2];
        for (i, (v, l)) in x.iter().zip(y).enumerate() {
            n_class[l.index()] += 1;
            for (f, val) in v.iter() {
                if val < 0.0 {
                    return Err(Error::precondition(format!(
                        "multinomial naive Bayes needs non-negative features (sample {i})"
                    )));
                }
                counts[l.index()][f] += val;
            }
        }
        let n = x.len() as f64;
        let class_log_prior = n_class.map(|c| (c as f64 / n).ln());
        let feature_log_prob = counts.map(|row| {
            let total: f64 = row.iter().sum::<f64>() + p.alpha * dim as f64;
            row.iter().map(|c| ((c + p.alpha) / total).ln()).collect()
        });
        Ok(MultinomialNb {
            class_log_prior,
            feature_log_prob,
        })
    }

    pub fn class_log_prior(&self) -> [f64; 2] {
        self.class_log_prior
    }

    pub fn feature_log_prob(&self, class: Label, feature: usize) -> f64 {
        self.feature_log_prob[class.index()][feature]
    }

    pub fn joint_log_likelihood(&self, v: &SparseVector) -> [f64; 2] {
        [0, 1].map(|c| self.class_log_prior[c] + v.dot_dense(&self.feature_log_prob[c]))
    }

    pub fn proba(&self, v: &SparseVector) -> ProbaRow {
        let [a, b] = self.joint_log_likelihood(v);
        let m = a.max(b);
        let (ea, eb) = ((a - m).exp(), (b - m).exp());
        let p1 = eb / (ea + eb);
        [1.0 - p1, p1]
    }
}
