use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

pub const ROC_AREA_RULE: &str = "trapezoidal";
pub const PR_AREA_RULE: &str = "step_interpolated_precision";

/// Curve as `[x, y]` points. `thresholds[i]` is the score cut-off (predict
/// positive when `score >= threshold`) that produces `points[i + 1]`; the
/// first point is the "predict nothing positive" anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoints {
    pub points: Vec<[f64; 2]>,
    pub thresholds: Vec<f64>,
    pub area: f64,
    pub area_rule: String,
}

fn check_inputs(scores: &[f64], truth: &[Label]) -> Result<(u64, u64)> {
    if scores.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite { sample: i });
    }
    let pos = truth.iter().filter(|l| l.is_positive()).count() as u64;
    Ok((pos, truth.len() as u64 - pos))
}

/// Per distinct score, in decreasing score order: (score, positives, negatives).
fn descending_groups(scores: &[f64], truth: &[Label]) -> Vec<(f64, u64, u64)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups: Vec<(f64, u64, u64)> = Vec::new();
    for i in order {
        let (p, n) = if truth[i].is_positive() { (1, 0) } else { (0, 1) };
        match groups.last_mut() {
            Some(g) if g.0 == scores[i] => {
                g.1 += p;
                g.2 += n;
            }
            _ => groups.push((scores[i], p, n)),
        }
    }
    groups
}

pub fn roc_curve(scores: &[f64], truth: &[Label]) -> Result<CurvePoints> {
    let (pos, neg) = check_inputs(scores, truth)?;
    if pos == 0 || neg == 0 {
        return Err(Error::precondition("ROC curve needs both classes in the truth labels"));
    }
    let mut points = vec![[0.0, 0.0]];
    let mut thresholds = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut area = 0.0;
    for (s, p, n) in descending_groups(scores, truth) {
        tp += p;
        fp += n;
        let next = [fp as f64 / neg as f64, tp as f64 / pos as f64];
        let prev = points[points.len() - 1];
        area += (next[0] - prev[0]) * (next[1] + prev[1]) / 2.0;
        points.push(next);
        thresholds.push(s);
    }
    Ok(CurvePoints {
        points,
        thresholds,
        area,
        area_rule: ROC_AREA_RULE.into(),
    })
}

/// ROC AUC as the Mann-Whitney statistic `(concordant + tied/2) / (P N)`,
/// counted exactly in integers.
pub fn auc(scores: &[f64], truth: &[Label]) -> Result<f64> {
    let (pos, neg) = check_inputs(scores, truth)?;
    if pos == 0 || neg == 0 {
        return Err(Error::precondition("AUC needs both classes in the truth labels"));
    }
    // Walking groups from the highest score, every positive in a group beats
    // the negatives of all lower groups, which are not yet seen.
    let mut twice: u128 = 0;
    let mut neg_above: u64 = 0;
    for (_, p, n) in descending_groups(scores, truth) {
        let below = neg - neg_above - n;
        twice += 2 * p as u128 * below as u128 + p as u128 * n as u128;
        neg_above += n;
    }
    Ok(twice as f64 / (2 * pos as u128 * neg as u128) as f64)
}

pub fn pr_curve(scores: &[f64], truth: &[Label]) -> Result<CurvePoints> {
    let (pos, _) = check_inputs(scores, truth)?;
    if pos == 0 {
        return Err(Error::precondition("PR curve needs at least one positive record"));
    }
    let mut points = vec![[0.0, 1.0]];
    let mut thresholds = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    for (s, p, n) in descending_groups(scores, truth) {
        tp += p;
        fp += n;
        points.push([tp as f64 / pos as f64, tp as f64 / (tp + fp) as f64]);
        thresholds.push(s);
    }
    // Interpolated precision: best precision at any recall at least as high.
    let mut interp = vec![0.0; points.len()];
    let mut best: f64 = 0.0;
    for i in (0..points.len()).rev() {
        best = best.max(points[i][1]);
        interp[i] = best;
    }
    let area = (1..points.len())
        .map(|i| (points[i][0] - points[i - 1][0]) * interp[i])
        .sum();
    Ok(CurvePoints {
        points,
        thresholds,
        area,
        area_rule: PR_AREA_RULE.into(),
    })
}
