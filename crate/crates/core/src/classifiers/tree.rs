//! CART decision tree with Gini impurity over sparse features.
//!
//! A split sends `x[feature] <= threshold` to the left child. Candidate
//! features are examined in ascending index order and a candidate replaces
//! the incumbent only when strictly better, so ties resolve to the lowest
//! feature index and then the lowest threshold. Nodes are stored in a flat
//! arena (root at 0) so that deep trees neither overflow the stack while
//! building nor exceed parser nesting limits when persisted.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, MaxFeatures, ProbaRow, TreeParams};
use crate::corpus::Label;
use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

/// Growth settings shared by single trees and forest members.
pub(super) struct GrowSettings {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl DecisionTree {
    pub fn fit(x: &[SparseVector], y: &[Label], p: &TreeParams) -> DecisionTree {
        let settings = GrowSettings {
            max_depth: p.max_depth,
            min_samples_split: p.min_samples_split,
            max_features: MaxFeatures::All,
        };
        let samples: Vec<usize> = (0..x.len()).collect();
        // An unused RNG: with MaxFeatures::All no features are sampled.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        DecisionTree::grow(x, y, samples, &settings, &mut rng)
    }

    /// Grows a tree on `samples`, which may contain repeated indices.
    pub(super) fn grow<R: Rng>(
        x: &[SparseVector],
        y: &[Label],
        samples: Vec<usize>,
        s: &GrowSettings,
        rng: &mut R,
    ) -> DecisionTree {
        let n_features = x.first().map_or(0, SparseVector::dim);
        let max_features = s.max_features.resolve(n_features);
        let mut nodes = vec![Node::Leaf { counts: [0, 0] }];
        let mut stack = vec![(0usize, samples, 0usize)];
        while let Some((id, samples, depth)) = stack.pop() {
            let counts = class_counts(y, &samples);
            let splittable = counts[0] > 0
                && counts[1] > 0
                && samples.len() >= s.min_samples_split
                && s.max_depth.is_none_or(|d| depth < d);
            let best = if splittable {
                best_split(x, y, &samples, counts, max_features, n_features, rng)
            } else {
                None
            };
            match best {
                None => nodes[id] = Node::Leaf { counts },
                Some(c) => {
                    let (left, right): (Vec<usize>, Vec<usize>) =
                        samples.iter().partition(|&&i| x[i].get(c.feature) <= c.threshold);
                    let l = nodes.len();
                    nodes.push(Node::Leaf { counts: [0, 0] });
                    nodes.push(Node::Leaf { counts: [0, 0] });
                    nodes[id] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left: l,
                        right: l + 1,
                    };
                    // right pushed first so the left subtree is built first
                    stack.push((l + 1, right, depth + 1));
                    stack.push((l, left, depth + 1));
                }
            }
        }
        DecisionTree { nodes }
    }

    /// Builds a tree from an arena (root at index 0). Returns `None` when a
    /// child index is out of range or does not point forward.
    pub fn from_nodes(nodes: Vec<Node>) -> Option<DecisionTree> {
        let n = nodes.len();
        let ok = n > 0
            && nodes.iter().enumerate().all(|(i, node)| match *node {
                Node::Leaf { .. } => true,
                Node::Split { left, right, .. } => left > i && right > i && left < n && right < n,
            });
        ok.then_some(DecisionTree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, d)) = stack.pop() {
            max = max.max(d);
            if let Node::Split { left, right, .. } = self.nodes[id] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        max
    }

    fn leaf_counts(&self, v: &SparseVector) -> [usize; 2] {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if v.get(feature) <= threshold { left } else { right },
            }
        }
    }

    /// Class fractions of the training samples in the reached leaf.
    pub fn proba(&self, v: &SparseVector) -> ProbaRow {
        let [a, b] = self.leaf_counts(v);
        let n = (a + b) as f64;
        if n == 0.0 {
            return [1.0, 0.0];
        }
        let p1 = b as f64 / n;
        [1.0 - p1, p1]
    }

    pub fn predict_one(&self, v: &SparseVector) -> Label {
        argmax(&self.proba(v))
    }
}

fn class_counts(y: &[Label], samples: &[usize]) -> [usize; 2] {
    let mut c = [0usize; 2];
    for &i in samples {
        c[y[i].index()] += 1;
    }
    c
}

/// Sum of squared class counts over the side size; the weighted Gini impurity
/// of a split is `n - score(left) - score(right)`, so larger is better.
fn purity(c: [usize; 2]) -> f64 {
    let n = (c[0] + c[1]) as f64;
    if n == 0.0 {
        0.0
    } else {
        ((c[0] * c[0] + c[1] * c[1]) as f64) / n
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m < b {
        m
    } else {
        a
    }
}

/// Per-feature sorted `(value, label)` entries of the node's non-zero cells.
struct FeatureColumn {
    feature: usize,
    entries: Vec<(f64, Label)>,
}

fn node_columns(x: &[SparseVector], y: &[Label], samples: &[usize]) -> Vec<FeatureColumn> {
    let mut cells: Vec<(usize, f64, Label)> = Vec::new();
    for &i in samples {
        cells.extend(x[i].iter().map(|(f, v)| (f, v, y[i])));
    }
    cells.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<FeatureColumn> = Vec::new();
    for (f, v, l) in cells {
        match out.last_mut() {
            Some(col) if col.feature == f => col.entries.push((v, l)),
            _ => out.push(FeatureColumn {
                feature: f,
                entries: vec![(v, l)],
            }),
        }
    }
    out
}

fn is_constant(col: &FeatureColumn, n: usize) -> bool {
    let first = col.entries[0].0;
    col.entries.len() == n && col.entries.iter().all(|e| e.0 == first)
}

fn best_split<R: Rng>(
    x: &[SparseVector],
    y: &[Label],
    samples: &[usize],
    totals: [usize; 2],
    max_features: usize,
    n_features: usize,
    rng: &mut R,
) -> Option<Candidate> {
    let n = samples.len();
    let mut columns = node_columns(x, y, samples);
    columns.retain(|c| !is_constant(c, n));
    if columns.is_empty() {
        return None;
    }
    if max_features < n_features && max_features < columns.len() {
        let mut keep: Vec<usize> = sample(rng, columns.len(), max_features).into_vec();
        keep.sort_unstable();
        let mut it = keep.into_iter().peekable();
        let mut idx = 0;
        columns.retain(|_| {
            let k = it.peek() == Some(&idx);
            if k {
                it.next();
            }
            idx += 1;
            k
        });
    }
    let mut best: Option<Candidate> = None;
    for col in &columns {
        if let Some(c) = best_threshold(col, n, totals) {
            if best.as_ref().is_none_or(|b| c.score > b.score) {
                best = Some(c);
            }
        }
    }
    best
}

/// Sweeps the values of one feature (implicit zeros included) and returns the
/// best threshold between consecutive distinct values.
fn best_threshold(col: &FeatureColumn, n: usize, totals: [usize; 2]) -> Option<Candidate> {
    let mut nz = [0usize; 2];
    for &(_, l) in &col.entries {
        nz[l.index()] += 1;
    }
    let zeros = [totals[0] - nz[0], totals[1] - nz[1]];
    let n_zero = zeros[0] + zeros[1];

    // Merge negatives, the zero block and positives into one ascending run of
    // (value, counts) groups.
    let mut groups: Vec<(f64, [usize; 2])> = Vec::new();
    let push = |v: f64, c: [usize; 2], groups: &mut Vec<(f64, [usize; 2])>| match groups.last_mut() {
        Some(g) if g.0 == v => {
            g.1[0] += c[0];
            g.1[1] += c[1];
        }
        _ => groups.push((v, c)),
    };
    let split_at = col.entries.partition_point(|e| e.0 < 0.0);
    for &(v, l) in &col.entries[..split_at] {
        let mut c = [0, 0];
        c[l.index()] = 1;
        push(v, c, &mut groups);
    }
    if n_zero > 0 {
        push(0.0, zeros, &mut groups);
    }
    for &(v, l) in &col.entries[split_at..] {
        let mut c = [0, 0];
        c[l.index()] = 1;
        push(v, c, &mut groups);
    }
    debug_assert_eq!(groups.iter().map(|g| g.1[0] + g.1[1]).sum::<usize>(), n);

    let mut left = [0usize; 2];
    let mut best: Option<Candidate> = None;
    for w in groups.windows(2) {
        left[0] += w[0].1[0];
        left[1] += w[0].1[1];
        let right = [totals[0] - left[0], totals[1] - left[1]];
        let score = purity(left) + purity(right);
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(Candidate {
                feature: col.feature,
                threshold: midpoint(w[0].0, w[1].0),
                score,
            });
        }
    }
    best
}
