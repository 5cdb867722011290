use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, GrowSettings};
use super::{ForestParams, ProbaRow};
use crate::corpus::Label;
use crate::features::SparseVector;

/// Bagged Gini trees with per-split feature subsampling. Probabilities are
/// the fraction of trees voting for each class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn fit(x: &[SparseVector], y: &[Label], p: &ForestParams, seed: u64) -> RandomForest {
        let settings = GrowSettings {
            max_depth: p.max_depth,
            min_samples_split: p.min_samples_split,
            max_features: p.max_features,
        };
        // Each tree owns the RNG stream (seed, tree index), so the result does
        // not depend on how trees are scheduled.
        let grow_one = |t: usize| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let n = x.len();
            let samples: Vec<usize> = if p.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            DecisionTree::grow(x, y, samples, &settings, &mut rng)
        };
        #[cfg(feature = "parallel")]
        let trees = {
            use rayon::prelude::*;
            (0..p.trees).into_par_iter().map(grow_one).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let trees = (0..p.trees).map(grow_one).collect();
        RandomForest { trees }
    }

    pub(super) fn from_trees(trees: Vec<DecisionTree>) -> RandomForest {
        RandomForest { trees }
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn proba(&self, v: &SparseVector) -> ProbaRow {
        let votes = self.trees.iter().filter(|t| t.predict_one(v).is_positive()).count();
        let p1 = votes as f64 / self.trees.len() as f64;
        [1.0 - p1, p1]
    }
}
