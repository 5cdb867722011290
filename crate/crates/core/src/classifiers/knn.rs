use serde::{Deserialize, Serialize};

use super::{KnnParams, ProbaRow};
use crate::corpus::Label;
use crate::features::SparseVector;

/// k-nearest neighbours under cosine distance. The training matrix is kept
/// verbatim. Distance ties go to the lower training index; a zero vector is
/// at distance 1 from everything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "KnnFile", into = "KnnFile")]
pub struct Knn {
    k: usize,
    points: Vec<SparseVector>,
    labels: Vec<Label>,
    norms: Vec<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
struct KnnFile {
    k: usize,
    points: Vec<SparseVector>,
    labels: Vec<Label>,
}

impl From<KnnFile> for Knn {
    fn from(f: KnnFile) -> Knn {
        let norms = f.points.iter().map(SparseVector::norm).collect();
        Knn {
            k: f.k,
            points: f.points,
            labels: f.labels,
            norms,
        }
    }
}

impl From<Knn> for KnnFile {
    fn from(k: Knn) -> KnnFile {
        KnnFile {
            k: k.k,
            points: k.points,
            labels: k.labels,
        }
    }
}

pub fn cosine_distance(a: &SparseVector, b: &SparseVector, na: f64, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    1.0 - a.dot(b) / (na * nb)
}

impl Knn {
    pub fn fit(x: &[SparseVector], y: &[Label], p: &KnnParams) -> Knn {
        Knn::from(KnnFile {
            k: p.k_neighbors,
            points: x.to_vec(),
            labels: y.to_vec(),
        })
    }

    /// Indices of the `k` nearest training points, nearest first.
    pub fn neighbors(&self, v: &SparseVector) -> Vec<usize> {
        let nv = v.norm();
        let mut d: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (cosine_distance(v, p, nv, self.norms[i]), i))
            .collect();
        let k = self.k.min(d.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < d.len() {
            d.select_nth_unstable_by(k - 1, cmp);
            d.truncate(k);
        }
        d.sort_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }

    pub fn proba(&self, v: &SparseVector) -> ProbaRow {
        let nn = self.neighbors(v);
        let pos = nn.iter().filter(|&&i| self.labels[i].is_positive()).count();
        let p1 = pos as f64 / nn.len() as f64;
        [1.0 - p1, p1]
    }
}
