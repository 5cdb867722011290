//! Evaluation: confusion matrices and averaged metrics, ROC/PR curves, the
//! stratified K-fold harness and report files.
//!
//! Class 1 (sarcastic) is the positive class throughout. Micro averaging is
//! the default reporting mode: it pools the decisions of both classes, which
//! makes accuracy, precision, recall and F1 coincide.

mod curves;
mod kfold;
mod report;

pub use curves::{auc, pr_curve, roc_curve, CurvePoints, PR_AREA_RULE, ROC_AREA_RULE};
pub use kfold::{run_kfold, run_kfold_with_pipelines, FoldMetrics, FoldReport, KfoldSource, MetricSummary};
pub use report::{
    evaluate, file_stem, render_overlay_svg, write_report_files, CurveKind, ModelEval, Report, REPORT_FORMAT_VERSION,
};

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn correct(&self) -> u64 {
        self.tp + self.tn
    }

    /// (tp, fp, fn) from the point of view of `class`.
    pub fn one_vs_rest(&self, class: Label) -> (u64, u64, u64) {
        match class {
            Label::Sarcastic => (self.tp, self.fp, self.fn_),
            Label::NonSarcastic => (self.tn, self.fn_, self.fp),
        }
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

pub fn confusion(preds: &[Label], truth: &[Label]) -> Result<ConfusionMatrix> {
    if preds.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: preds.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::precondition("confusion matrix of zero records"));
    }
    let mut c = ConfusionMatrix::default();
    for (p, t) in preds.iter().zip(truth) {
        match (p.is_positive(), t.is_positive()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    Micro,
    Macro,
    /// Binary metrics of the positive class.
    PerClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub averaging: Averaging,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when some ratio had a zero denominator and was reported as 0.
    pub degenerate: bool,
}

/// Binary precision/recall/F1 of one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: bool,
}

fn ratio(num: u64, den: u64, degenerate: &mut bool) -> f64 {
    if den == 0 {
        *degenerate = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// F1 as `2tp / (2tp + fp + fn)`, which equals the harmonic mean of
/// precision and recall but is exact in integer counts.
fn f1_counts(tp: u64, fp: u64, fn_: u64, degenerate: &mut bool) -> f64 {
    ratio(2 * tp, 2 * tp + fp + fn_, degenerate)
}

pub fn class_metrics(c: &ConfusionMatrix, class: Label) -> ClassMetrics {
    let (tp, fp, fn_) = c.one_vs_rest(class);
    let mut degenerate = false;
    let precision = ratio(tp, tp + fp, &mut degenerate);
    let recall = ratio(tp, tp + fn_, &mut degenerate);
    let f1 = f1_counts(tp, fp, fn_, &mut degenerate);
    ClassMetrics {
        precision,
        recall,
        f1,
        degenerate,
    }
}

pub fn metrics(c: &ConfusionMatrix, averaging: Averaging) -> Result<MetricsReport> {
    if c.total() == 0 {
        return Err(Error::precondition("metrics of an empty confusion matrix"));
    }
    let mut degenerate = false;
    let accuracy = ratio(c.correct(), c.total(), &mut degenerate);
    let (precision, recall, f1) = match averaging {
        Averaging::Micro => {
            // Pooled over both classes every error is one false positive (for
            // the predicted class) and one false negative (for the true one).
            let tp = c.correct();
            let wrong = c.fp + c.fn_;
            (
                ratio(tp, tp + wrong, &mut degenerate),
                ratio(tp, tp + wrong, &mut degenerate),
                f1_counts(tp, wrong, wrong, &mut degenerate),
            )
        }
        Averaging::Macro => {
            let a = class_metrics(c, Label::NonSarcastic);
            let b = class_metrics(c, Label::Sarcastic);
            degenerate |= a.degenerate || b.degenerate;
            (
                (a.precision + b.precision) / 2.0,
                (a.recall + b.recall) / 2.0,
                (a.f1 + b.f1) / 2.0,
            )
        }
        Averaging::PerClass => {
            let m = class_metrics(c, Label::Sarcastic);
            degenerate |= m.degenerate;
            (m.precision, m.recall, m.f1)
        }
    };
    Ok(MetricsReport {
        averaging,
        accuracy,
        precision,
        recall,
        f1,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(v: &[u8]) -> Vec<Label> {
        v.iter().map(|&b| Label::from_index(b as usize).unwrap()).collect()
    }

    #[test]
    fn confusion_fixture() {
        let c = confusion(&labels(&[1, 0, 1, 1]), &labels(&[1, 0, 0, 1])).unwrap();
        assert_eq!(
            c,
            ConfusionMatrix {
                tp: 2,
                fp: 1,
                fn_: 0,
                tn: 1
            }
        );
        let m = metrics(&c, Averaging::Micro).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert_eq!((m.precision, m.recall, m.f1), (0.75, 0.75, 0.75));
        assert!(!m.degenerate);

        // Positive class: precision 2/3, recall 1, f1 0.8.
        let p = metrics(&c, Averaging::PerClass).unwrap();
        assert!((p.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.recall, 1.0);
        assert!((p.f1 - 0.8).abs() < 1e-15);
        // Negative class: precision 1, recall 1/2, f1 2/3.
        let m = metrics(&c, Averaging::Macro).unwrap();
        assert!((m.precision - (2.0 / 3.0 + 1.0) / 2.0).abs() < 1e-15);
        assert!((m.recall - 0.75).abs() < 1e-15);
        assert!((m.f1 - (0.8 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_inverted() {
        let t = labels(&[1, 0, 0, 1, 1]);
        let c = confusion(&t, &t).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        for a in [Averaging::Micro, Averaging::Macro, Averaging::PerClass] {
            let m = metrics(&c, a).unwrap();
            assert_eq!([m.accuracy, m.precision, m.recall, m.f1], [1.0; 4]);
        }
        let inv: Vec<Label> = t.iter().map(|l| Label::from_index(1 - l.index()).unwrap()).collect();
        let c = confusion(&inv, &t).unwrap();
        assert_eq!((c.tp, c.tn), (0, 0));
    }

    #[test]
    fn degenerate_precision_flagged() {
        let c = ConfusionMatrix {
            tp: 0,
            fp: 0,
            fn_: 3,
            tn: 5,
        };
        let m = metrics(&c, Averaging::PerClass).unwrap();
        assert_eq!(m.precision, 0.0);
        assert!(m.degenerate);
        assert!(!metrics(&c, Averaging::Micro).unwrap().degenerate);
    }

    #[test]
    fn errors() {
        assert!(confusion(&labels(&[1]), &labels(&[1, 0])).is_err());
        assert!(confusion(&[], &[]).is_err());
        assert!(metrics(&ConfusionMatrix::default(), Averaging::Micro).is_err());
    }

    proptest! {
        #[test]
        fn micro_identity(tp in 0u64..5000, fp in 0u64..5000, fn_ in 0u64..5000, tn in 0u64..5000) {
            prop_assume!(tp + fp + fn_ + tn > 0);
            let m = metrics(&ConfusionMatrix { tp, fp, fn_, tn }, Averaging::Micro).unwrap();
            prop_assert_eq!(m.accuracy, m.precision);
            prop_assert_eq!(m.accuracy, m.recall);
            prop_assert_eq!(m.accuracy, m.f1);
        }

        #[test]
        fn counts_partition(v in proptest::collection::vec((0u8..2, 0u8..2), 1..200)) {
            let (p, t): (Vec<u8>, Vec<u8>) = v.into_iter().unzip();
            let c = confusion(&labels(&p), &labels(&t)).unwrap();
            prop_assert_eq!(c.total() as usize, p.len());
        }
    }
}
