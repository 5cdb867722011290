//! The seven classical classifiers behind a single train / predict interface.
//!
//! All models are binary over [`Label`], deterministic for a fixed seed and
//! immutable once trained. Probability rows are `[p(0), p(1)]`.

mod forest;
mod knn;
mod linear;
mod naive_bayes;
mod tree;

use serde::{Deserialize, Serialize};

pub use forest::RandomForest;
pub use knn::Knn;
pub use linear::{logistic_gradient, logistic_loss, LinearModel};
pub use naive_bayes::MultinomialNb;
pub use tree::{DecisionTree, Node};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::SparseVector;

/// Class probabilities `[p(label 0), p(label 1)]`.
pub type ProbaRow = [f64; 2];

/// Label with the larger probability; equal probabilities go to label 0.
pub fn argmax(row: &ProbaRow) -> Label {
    if row[1] > row[0] {
        Label::Sarcastic
    } else {
        Label::NonSarcastic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    RandomForest,
    DecisionTree,
    Knn,
    LinearSvm,
    MultinomialNb,
    LogisticRegression,
    Sgd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::RandomForest,
        Algorithm::DecisionTree,
        Algorithm::Knn,
        Algorithm::LinearSvm,
        Algorithm::MultinomialNb,
        Algorithm::LogisticRegression,
        Algorithm::Sgd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::RandomForest => "random_forest",
            Algorithm::DecisionTree => "decision_tree",
            Algorithm::Knn => "knn",
            Algorithm::LinearSvm => "linear_svm",
            Algorithm::MultinomialNb => "multinomial_nb",
            Algorithm::LogisticRegression => "logistic_regression",
            Algorithm::Sgd => "sgd",
        }
    }

    pub fn default_spec(self) -> ModelSpec {
        match self {
            Algorithm::RandomForest => ModelSpec::RandomForest(ForestParams::default()),
            Algorithm::DecisionTree => ModelSpec::DecisionTree(TreeParams::default()),
            Algorithm::Knn => ModelSpec::Knn(KnnParams::default()),
            Algorithm::LinearSvm => ModelSpec::LinearSvm(SvmParams::default()),
            Algorithm::MultinomialNb => ModelSpec::MultinomialNb(NbParams::default()),
            Algorithm::LogisticRegression => ModelSpec::LogisticRegression(LogisticParams::default()),
            Algorithm::Sgd => ModelSpec::Sgd(SgdParams::default()),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            Error::config(format!(
                "unknown algorithm {s:?}; expected one of {}",
                Algorithm::ALL.map(Algorithm::name).join(", ")
            ))
        })
    }
}

/// How many features a tree considers at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// Every feature.
    All,
    /// `ceil(sqrt(V))` of the `V` features.
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => ((n_features as f64).sqrt().ceil() as usize).max(1),
            MaxFeatures::Count(n) => n.min(n_features),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            max_depth: None,
            min_samples_split: 2,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub k_neighbors: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k_neighbors: 5 }
    }
}

/// Pegasos-style stochastic sub-gradient descent on the hinge loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 20,
        }
    }
}

/// Full-batch gradient descent. The loss gradient of unit-norm TF-IDF rows is
/// 1/4-Lipschitz, so steps up to 4 are stable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub lambda: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            learning_rate: 1.0,
            epochs: 500,
            lambda: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SgdLoss {
    Hinge,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub lambda: f64,
    pub loss: SgdLoss,
}

impl Default for SgdParams {
    fn default() -> Self {
        SgdParams {
            learning_rate: 0.1,
            epochs: 20,
            lambda: 1e-4,
            loss: SgdLoss::Hinge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NbParams {
    pub alpha: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        NbParams { alpha: 1.0 }
    }
}

/// Algorithm choice and its hyperparameters, tagged by `algorithm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum ModelSpec {
    RandomForest(ForestParams),
    DecisionTree(TreeParams),
    Knn(KnnParams),
    LinearSvm(SvmParams),
    MultinomialNb(NbParams),
    LogisticRegression(LogisticParams),
    Sgd(SgdParams),
}

impl ModelSpec {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            ModelSpec::RandomForest(_) => Algorithm::RandomForest,
            ModelSpec::DecisionTree(_) => Algorithm::DecisionTree,
            ModelSpec::Knn(_) => Algorithm::Knn,
            ModelSpec::LinearSvm(_) => Algorithm::LinearSvm,
            ModelSpec::MultinomialNb(_) => Algorithm::MultinomialNb,
            ModelSpec::LogisticRegression(_) => Algorithm::LogisticRegression,
            ModelSpec::Sgd(_) => Algorithm::Sgd,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must be strictly positive, got {v}")))
            }
        }
        fn depth(d: Option<usize>) -> Result<()> {
            match d {
                Some(0) => Err(Error::config("max_depth must be strictly positive")),
                _ => Ok(()),
            }
        }
        match *self {
            ModelSpec::RandomForest(p) => {
                positive("trees", p.trees as f64)?;
                depth(p.max_depth)?;
                if p.min_samples_split < 2 {
                    return Err(Error::config("min_samples_split must be at least 2"));
                }
                if p.max_features == MaxFeatures::Count(0) {
                    return Err(Error::config("max_features must be strictly positive"));
                }
            }
            ModelSpec::DecisionTree(p) => {
                depth(p.max_depth)?;
                if p.min_samples_split < 2 {
                    return Err(Error::config("min_samples_split must be at least 2"));
                }
            }
            ModelSpec::Knn(p) => positive("k_neighbors", p.k_neighbors as f64)?,
            ModelSpec::LinearSvm(p) => {
                positive("lambda", p.lambda)?;
                positive("epochs", p.epochs as f64)?;
            }
            ModelSpec::MultinomialNb(p) => positive("alpha", p.alpha)?,
            ModelSpec::LogisticRegression(p) => {
                positive("learning_rate", p.learning_rate)?;
                positive("epochs", p.epochs as f64)?;
                positive("lambda", p.lambda)?;
            }
            ModelSpec::Sgd(p) => {
                positive("learning_rate", p.learning_rate)?;
                positive("epochs", p.epochs as f64)?;
                positive("lambda", p.lambda)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    #[serde(flatten)]
    pub spec: ModelSpec,
    pub seed: u64,
}

impl Hyperparams {
    pub fn new(spec: ModelSpec, seed: u64) -> Self {
        Hyperparams { spec, seed }
    }

    pub fn defaults(algorithm: Algorithm, seed: u64) -> Self {
        Hyperparams::new(algorithm.default_spec(), seed)
    }

    pub fn algorithm(&self) -> Algorithm {
        self.spec.algorithm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
enum Learned {
    RandomForest(RandomForest),
    DecisionTree(DecisionTree),
    Knn(Knn),
    LinearSvm(LinearModel),
    MultinomialNb(MultinomialNb),
    LogisticRegression(LinearModel),
    Sgd(LinearModel),
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A fitted classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    format_version: u32,
    n_features: usize,
    classes: [u8; 2],
    hyperparams: Hyperparams,
    model: Learned,
}

fn check_inputs(x: &[SparseVector], dim: usize) -> Result<()> {
    for (i, v) in x.iter().enumerate() {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.dim(),
            });
        }
        if v.iter().any(|(_, val)| !val.is_finite()) {
            return Err(Error::NonFinite { sample: i });
        }
    }
    Ok(())
}

pub fn train(x: &[SparseVector], y: &[Label], hp: &Hyperparams) -> Result<TrainedModel> {
    hp.spec.validate()?;
    if x.len() != y.len() {
        return Err(Error::precondition(format!(
            "{} feature vectors but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::precondition("training needs at least two samples"));
    }
    if !(y.contains(&Label::NonSarcastic) && y.contains(&Label::Sarcastic)) {
        return Err(Error::precondition("training set must contain both classes"));
    }
    let dim = x[0].dim();
    check_inputs(x, dim)?;
    let model = match hp.spec {
        ModelSpec::RandomForest(p) => Learned::RandomForest(RandomForest::fit(x, y, &p, hp.seed)),
        ModelSpec::DecisionTree(p) => Learned::DecisionTree(DecisionTree::fit(x, y, &p)),
        ModelSpec::Knn(p) => Learned::Knn(Knn::fit(x, y, &p)),
        ModelSpec::LinearSvm(p) => Learned::LinearSvm(linear::fit_pegasos(x, y, &p, hp.seed)),
        ModelSpec::MultinomialNb(p) => Learned::MultinomialNb(MultinomialNb::fit(x, y, &p)?),
        ModelSpec::LogisticRegression(p) => Learned::LogisticRegression(linear::fit_logistic(x, y, &p)),
        ModelSpec::Sgd(p) => Learned::Sgd(linear::fit_sgd(x, y, &p, hp.seed)),
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        n_features: dim,
        classes: [0, 1],
        hyperparams: *hp,
        model,
    })
}

impl TrainedModel {
    pub fn algorithm(&self) -> Algorithm {
        self.hyperparams.algorithm()
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyperparams
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn predict_proba(&self, x: &[SparseVector]) -> Result<Vec<ProbaRow>> {
        check_inputs(x, self.n_features)?;
        Ok(x.iter().map(|v| self.proba_one(v)).collect())
    }

    pub fn predict(&self, x: &[SparseVector]) -> Result<Vec<Label>> {
        Ok(self.predict_proba(x)?.iter().map(argmax).collect())
    }

    fn proba_one(&self, v: &SparseVector) -> ProbaRow {
        match &self.model {
            Learned::RandomForest(m) => m.proba(v),
            Learned::DecisionTree(m) => m.proba(v),
            Learned::Knn(m) => m.proba(v),
            Learned::MultinomialNb(m) => m.proba(v),
            Learned::LinearSvm(m) | Learned::LogisticRegression(m) | Learned::Sgd(m) => m.proba(v),
        }
    }

    pub fn as_decision_tree(&self) -> Option<&DecisionTree> {
        match &self.model {
            Learned::DecisionTree(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_forest(&self) -> Option<&RandomForest> {
        match &self.model {
            Learned::RandomForest(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_linear(&self) -> Option<&LinearModel> {
        match &self.model {
            Learned::LinearSvm(m) | Learned::LogisticRegression(m) | Learned::Sgd(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_naive_bayes(&self) -> Option<&MultinomialNb> {
        match &self.model {
            Learned::MultinomialNb(m) => Some(m),
            _ => None,
        }
    }

    /// Logistic model with fixed parameters, mainly for tests and tooling.
    pub fn logistic_from_parts(weights: Vec<f64>, bias: f64) -> TrainedModel {
        TrainedModel {
            format_version: MODEL_FORMAT_VERSION,
            n_features: weights.len(),
            classes: [0, 1],
            hyperparams: Hyperparams::defaults(Algorithm::LogisticRegression, 0),
            model: Learned::LogisticRegression(LinearModel::new(weights, bias)),
        }
    }

    /// Forest assembled from already-built trees, mainly for tests and tooling.
    pub fn forest_from_trees(trees: Vec<DecisionTree>, n_features: usize) -> TrainedModel {
        TrainedModel {
            format_version: MODEL_FORMAT_VERSION,
            n_features,
            classes: [0, 1],
            hyperparams: Hyperparams::new(
                ModelSpec::RandomForest(ForestParams {
                    trees: trees.len(),
                    ..Default::default()
                }),
                0,
            ),
            model: Learned::RandomForest(RandomForest::from_trees(trees)),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<TrainedModel> {
        #[derive(Deserialize)]
        struct Version {
            format_version: u32,
        }
        let v: Version = serde_json::from_str(s)?;
        if v.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                expected: MODEL_FORMAT_VERSION,
                found: v.format_version,
            });
        }
        Ok(serde_json::from_str(s)?)
    }
}
