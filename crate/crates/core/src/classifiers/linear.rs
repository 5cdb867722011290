//! Linear models: logistic regression by full-batch gradient descent, a
//! Pegasos linear SVM and per-sample SGD. All three score `w·x + b` and map
//! the margin to a probability with the logistic sigmoid.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LogisticParams, ProbaRow, SgdLoss, SgdParams, SvmParams};
use crate::corpus::Label;
use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    weights: Vec<f64>,
    bias: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn target(l: Label) -> f64 {
    if l.is_positive() {
        1.0
    } else {
        0.0
    }
}

fn sign(l: Label) -> f64 {
    if l.is_positive() {
        1.0
    } else {
        -1.0
    }
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        LinearModel { weights, bias }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn margin(&self, v: &SparseVector) -> f64 {
        v.dot_dense(&self.weights) + self.bias
    }

    pub fn proba(&self, v: &SparseVector) -> ProbaRow {
        let p1 = sigmoid(self.margin(v));
        [1.0 - p1, p1]
    }
}

/// Mean log-loss plus `lambda/2 * |w|^2` (the bias is not penalized).
pub fn logistic_loss(w: &[f64], b: f64, x: &[SparseVector], y: &[Label], lambda: f64) -> f64 {
    let n = x.len() as f64;
    let data: f64 = x
        .iter()
        .zip(y)
        .map(|(v, &l)| {
            let z = v.dot_dense(w) + b;
            softplus(z) - target(l) * z
        })
        .sum();
    data / n + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>()
}

/// Analytic gradient of [`logistic_loss`] with respect to `(w, b)`.
pub fn logistic_gradient(w: &[f64], b: f64, x: &[SparseVector], y: &[Label], lambda: f64) -> (Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (v, &l) in x.iter().zip(y) {
        let r = sigmoid(v.dot_dense(w) + b) - target(l);
        for (i, val) in v.iter() {
            gw[i] += r * val;
        }
        gb += r;
    }
    for (g, wi) in gw.iter_mut().zip(w) {
        *g = *g / n + lambda * wi;
    }
    (gw, gb / n)
}

pub(super) fn fit_logistic(x: &[SparseVector], y: &[Label], p: &LogisticParams) -> LinearModel {
    let dim = x[0].dim();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    for _ in 0..p.epochs {
        let (gw, gb) = logistic_gradient(&w, b, x, y, p.lambda);
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= p.learning_rate * g;
        }
        b -= p.learning_rate * gb;
    }
    LinearModel::new(w, b)
}

/// Dense weight vector stored as `scale * (v, c)`, where `c` is the weight of
/// an optional implicit constant feature. Multiplicative shrinkage is O(1).
struct ScaledWeights {
    scale: f64,
    v: Vec<f64>,
    c: f64,
}

impl ScaledWeights {
    fn new(dim: usize) -> Self {
        ScaledWeights {
            scale: 1.0,
            v: vec![0.0; dim],
            c: 0.0,
        }
    }

    fn dot(&self, x: &SparseVector) -> f64 {
        self.scale * x.dot_dense(&self.v)
    }

    fn constant(&self) -> f64 {
        self.scale * self.c
    }

    fn shrink(&mut self, factor: f64) {
        if factor <= 0.0 {
            self.v.iter_mut().for_each(|x| *x = 0.0);
            self.c = 0.0;
            self.scale = 1.0;
            return;
        }
        self.scale *= factor;
        if self.scale < 1e-9 {
            let s = self.scale;
            self.v.iter_mut().for_each(|x| *x *= s);
            self.c *= s;
            self.scale = 1.0;
        }
    }

    fn add(&mut self, x: &SparseVector, coef: f64) {
        let k = coef / self.scale;
        for (i, val) in x.iter() {
            self.v[i] += k * val;
        }
    }

    fn add_constant(&mut self, coef: f64) {
        self.c += coef / self.scale;
    }

    fn into_parts(self) -> (Vec<f64>, f64) {
        let s = self.scale;
        (self.v.into_iter().map(|x| x * s).collect(), self.c * s)
    }
}

fn epoch_order(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Pegasos: step size `1/(lambda t)` on the regularized hinge loss. The bias
/// is learned as the weight of an implicit constant feature.
pub(super) fn fit_pegasos(x: &[SparseVector], y: &[Label], p: &SvmParams, seed: u64) -> LinearModel {
    let dim = x[0].dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = ScaledWeights::new(dim);
    let mut t = 0usize;
    for _ in 0..p.epochs {
        for i in epoch_order(x.len(), &mut rng) {
            t += 1;
            let eta = 1.0 / (p.lambda * t as f64);
            let s = sign(y[i]);
            let violated = s * (w.dot(&x[i]) + w.constant()) < 1.0;
            w.shrink(1.0 - eta * p.lambda);
            if violated {
                w.add(&x[i], eta * s);
                w.add_constant(eta * s);
            }
        }
    }
    let (weights, bias) = w.into_parts();
    LinearModel::new(weights, bias)
}

/// Per-sample SGD with a constant learning rate, L2 shrinkage on the
/// weights and an unpenalized bias.
pub(super) fn fit_sgd(x: &[SparseVector], y: &[Label], p: &SgdParams, seed: u64) -> LinearModel {
    let dim = x[0].dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = ScaledWeights::new(dim);
    let mut b = 0.0;
    for _ in 0..p.epochs {
        for i in epoch_order(x.len(), &mut rng) {
            let z = w.dot(&x[i]) + b;
            let step = match p.loss {
                SgdLoss::Hinge => {
                    let s = sign(y[i]);
                    if s * z < 1.0 {
                        s
                    } else {
                        0.0
                    }
                }
                SgdLoss::Log => target(y[i]) - sigmoid(z),
            };
            w.shrink(1.0 - p.learning_rate * p.lambda);
            if step != 0.0 {
                w.add(&x[i], p.learning_rate * step);
                b += p.learning_rate * step;
            }
        }
    }
    LinearModel::new(w.into_parts().0, b)
}
