use serde::{Deserialize, Serialize};

use super::{confusion, metrics, Averaging, ConfusionMatrix, MetricsReport};
use crate::classifiers::argmax;
use crate::corpus::{stratified_kfold, ClassCounts, Dataset, Label};
use crate::error::{Error, Result};
use crate::pipeline::{NativePipeline, NativeSpec, TextModel};

/// What gets evaluated in each fold: a native pipeline refit on the
/// training folds, or a fixed external model that is only queried.
#[derive(Clone, Copy)]
pub enum KfoldSource<'a> {
    Native(&'a NativeSpec),
    External(&'a dyn TextModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub test_counts: ClassCounts,
    pub confusion: ConfusionMatrix,
    pub micro: MetricsReport,
    #[serde(rename = "macro")]
    pub macro_: MetricsReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricSummary {
    fn of(m: &MetricsReport) -> Self {
        MetricSummary {
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        }
    }

    fn to_array(self) -> [f64; 4] {
        [self.accuracy, self.precision, self.recall, self.f1]
    }

    fn from_array(a: [f64; 4]) -> Self {
        MetricSummary {
            accuracy: a[0],
            precision: a[1],
            recall: a[2],
            f1: a[3],
        }
    }
}

/// Per-fold metrics plus mean and sample standard deviation. The last fold's
/// values are repeated as `final_fold` so that both readings of a single
/// "K-fold accuracy" figure (mean, or last fold) are available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldMetrics>,
    pub micro_mean: MetricSummary,
    pub micro_std: MetricSummary,
    pub macro_mean: MetricSummary,
    pub macro_std: MetricSummary,
    pub final_fold: MetricSummary,
    /// Sum of the per-fold confusion matrices.
    pub pooled: ConfusionMatrix,
    /// Out-of-fold P(class 1) per record, in dataset order.
    #[serde(skip)]
    pub oof_scores: Vec<f64>,
}

fn mean_std(rows: &[MetricSummary]) -> (MetricSummary, MetricSummary) {
    let n = rows.len() as f64;
    let mut mean = [0.0; 4];
    let mut var = [0.0; 4];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r.to_array()) {
            *m += v / n;
        }
    }
    for r in rows {
        for ((s, v), m) in var.iter_mut().zip(r.to_array()).zip(mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var.map(|s| if rows.len() > 1 { (s / (n - 1.0)).sqrt() } else { 0.0 });
    (MetricSummary::from_array(mean), MetricSummary::from_array(std))
}

struct FoldOutput {
    metrics: FoldMetrics,
    test: Vec<usize>,
    scores: Vec<f64>,
    pipeline: Option<NativePipeline>,
}

fn run_fold(d: &Dataset, source: KfoldSource, fold: usize, train: &[usize], test: &[usize]) -> Result<FoldOutput> {
    let held_out = d.subset(format!("{}-fold{fold}-test", d.name), test);
    let texts: Vec<String> = held_out.records.iter().map(|r| r.text.clone()).collect();
    let truth = held_out.labels();
    let (rows, pipeline) = match source {
        KfoldSource::Native(spec) => {
            let tr = d.subset(format!("{}-fold{fold}-train", d.name), train);
            let p = NativePipeline::fit(format!("fold{fold}"), &tr.texts(), &tr.labels(), spec)?;
            (p.predict_proba_texts(&texts)?, Some(p))
        }
        KfoldSource::External(m) => (m.predict_proba_texts(&texts)?, None),
    };
    if rows.len() != texts.len() {
        return Err(Error::DimensionMismatch {
            expected: texts.len(),
            found: rows.len(),
        });
    }
    let preds: Vec<Label> = rows.iter().map(argmax).collect();
    let c = confusion(&preds, &truth)?;
    Ok(FoldOutput {
        metrics: FoldMetrics {
            fold,
            n_train: train.len(),
            n_test: test.len(),
            test_counts: held_out.summary(),
            confusion: c,
            micro: metrics(&c, Averaging::Micro)?,
            macro_: metrics(&c, Averaging::Macro)?,
        },
        test: test.to_vec(),
        scores: rows.iter().map(|r| r[1]).collect(),
        pipeline,
    })
}

/// Stratified K-fold evaluation; see [`run_kfold_with_pipelines`].
pub fn run_kfold(d: &Dataset, source: KfoldSource, k: usize, seed: u64) -> Result<FoldReport> {
    run_kfold_with_pipelines(d, source, k, seed).map(|(r, _)| r)
}

/// Stratified K-fold evaluation. Native pipelines (preprocessing, vocabulary,
/// IDF and classifier) are fitted on the k-1 training folds only. Also
/// returns the fitted per-fold pipelines (empty for external models).
pub fn run_kfold_with_pipelines(
    d: &Dataset,
    source: KfoldSource,
    k: usize,
    seed: u64,
) -> Result<(FoldReport, Vec<NativePipeline>)> {
    let assignment = stratified_kfold(d, k, seed)?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..k).map(|f| assignment.train_test(f)).collect();
    let one = |f: usize| {
        run_fold(d, source, f, &splits[f].0, &splits[f].1).map_err(|e| Error::Fold {
            fold: f,
            source: Box::new(e),
        })
    };
    #[cfg(feature = "parallel")]
    let outputs: Vec<Result<FoldOutput>> = {
        use rayon::prelude::*;
        (0..k).into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outputs: Vec<Result<FoldOutput>> = (0..k).map(one).collect();
    let outputs = outputs.into_iter().collect::<Result<Vec<_>>>()?;

    let mut oof_scores = vec![0.0; d.len()];
    let mut pooled = ConfusionMatrix::default();
    let mut folds = Vec::with_capacity(k);
    let mut pipelines = Vec::new();
    for o in outputs {
        for (&i, &s) in o.test.iter().zip(&o.scores) {
            oof_scores[i] = s;
        }
        pooled.add(&o.metrics.confusion);
        folds.push(o.metrics);
        pipelines.extend(o.pipeline);
    }
    let micro: Vec<MetricSummary> = folds.iter().map(|f| MetricSummary::of(&f.micro)).collect();
    let macro_: Vec<MetricSummary> = folds.iter().map(|f| MetricSummary::of(&f.macro_)).collect();
    let (micro_mean, micro_std) = mean_std(&micro);
    let (macro_mean, macro_std) = mean_std(&macro_);
    let report = FoldReport {
        k,
        seed,
        final_fold: micro[k - 1],
        folds,
        micro_mean,
        micro_std,
        macro_mean,
        macro_std,
        pooled,
        oof_scores,
    };
    Ok((report, pipelines))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{Algorithm, Hyperparams};
    use crate::corpus::{synthetic_marker_corpus, LabeledComment};
    use crate::features::TfidfConfig;
    use crate::pipeline::{FnModel, InputKind};
    use crate::preprocess::PipelineConfig;

    fn spec(a: Algorithm) -> NativeSpec {
        NativeSpec {
            preprocess: PipelineConfig::default(),
            tfidf: TfidfConfig::default(),
            hyperparams: Hyperparams::defaults(a, 1),
        }
    }

    #[test]
    fn separable_corpus_every_fold_perfect() {
        let d = synthetic_marker_corpus(120, 4);
        for a in Algorithm::ALL {
            let s = spec(a);
            let r = run_kfold(&d, KfoldSource::Native(&s), 4, 9).unwrap();
            assert_eq!(r.folds.len(), 4);
            assert_eq!(r.pooled.total() as usize, d.len());
            assert_eq!(r.folds.iter().map(|f| f.n_test).sum::<usize>(), d.len());
            // Cosine neighbours can be swayed by shared filler words.
            let floor = if a == Algorithm::Knn { 0.9 } else { 1.0 };
            assert!(r.folds.iter().all(|f| f.micro.accuracy >= floor), "{a}");
            if floor == 1.0 {
                assert_eq!(r.micro_std.accuracy, 0.0);
            }
        }
    }

    #[test]
    fn constant_external_model_scores_majority_rate() {
        let records = (0..40)
            .map(|i| LabeledComment::new(&format!("t{i}"), Label::from_index(i % 2).unwrap()).unwrap())
            .collect();
        let d = Dataset::new("half", records);
        let m = FnModel::new("const", InputKind::Raw, |_| [0.6, 0.4]);
        let r = run_kfold(&d, KfoldSource::External(&m), 4, 0).unwrap();
        for f in &r.folds {
            let majority = f.test_counts.per_class[0] as f64 / f.n_test as f64;
            assert!((f.micro.accuracy - majority).abs() <= 1.0 / f.n_test as f64);
        }
    }

    #[test]
    fn errors_carry_fold_index() {
        let d = synthetic_marker_corpus(40, 1);
        assert!(run_kfold(&d, KfoldSource::Native(&spec(Algorithm::Knn)), 1, 0)
            .unwrap_err()
            .is_config());
        let mut bad = spec(Algorithm::Knn);
        bad.hyperparams = Hyperparams::new(
            crate::classifiers::ModelSpec::Knn(crate::classifiers::KnnParams { k_neighbors: 0 }),
            0,
        );
        match run_kfold(&d, KfoldSource::Native(&bad), 2, 0) {
            Err(Error::Fold { fold, .. }) => assert!(fold < 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn repeated_runs_identical() {
        let d = synthetic_marker_corpus(80, 2);
        let s = spec(Algorithm::RandomForest);
        let a = run_kfold(&d, KfoldSource::Native(&s), 3, 5).unwrap();
        let b = run_kfold(&d, KfoldSource::Native(&s), 3, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.oof_scores, b.oof_scores);
    }
}
