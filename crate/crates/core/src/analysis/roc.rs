use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Runs with `L_comp < threshold` are flagged as leaked.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Staircase from (0, 0) to (1, 1), nondecreasing in both rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
}

impl RocCurve {
    /// Lowest false-positive rate reaching at least `tpr`.
    pub fn fpr_at(&self, tpr: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.tpr >= tpr)
            .map(|p| p.fpr)
            .fold(1.0, f64::min)
    }
}

/// Sweeps the threshold over every observed score; low scores mean leaked.
pub fn roc_from_scores(scores: &[f64], positive: &[bool]) -> Result<RocCurve> {
    let positives = positive.iter().filter(|&&p| p).count();
    let negatives = positive.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateLabels {
            positives,
            negatives,
        });
    }
    let mut order: Vec<(f64, bool)> = scores.iter().copied().zip(positive.iter().copied()).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (np, nn) = (positives as f64, negatives as f64);
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let value = order[i].0;
        points.push(RocPoint {
            threshold: value,
            fpr: fp as f64 / nn,
            tpr: tp as f64 / np,
        });
        while i < order.len() && order[i].0 == value {
            if order[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
    }
    points.push(RocPoint {
        threshold: f64::INFINITY,
        fpr: 1.0,
        tpr: 1.0,
    });
    let auc = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum();
    Ok(RocCurve {
        points,
        auc,
        positives,
        negatives,
    })
}

/// Smallest threshold flagging at least a fraction `tpr` of positives.
///
/// Ties at the threshold pass, so the result is the next observed score above
/// the last positive that must be flagged.
pub fn threshold_for_tpr(scores: &[f64], positive: &[bool], tpr: f64) -> Result<f64> {
    let mut pos: Vec<f64> = scores
        .iter()
        .zip(positive)
        .filter(|(_, &p)| p)
        .map(|(&s, _)| s)
        .collect();
    if pos.is_empty() || pos.len() == scores.len() {
        return Err(Error::DegenerateLabels {
            positives: pos.len(),
            negatives: scores.len() - pos.len(),
        });
    }
    if tpr <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    pos.sort_by(f64::total_cmp);
    let k = ((tpr.min(1.0) * pos.len() as f64).ceil() as usize).max(1);
    let cut = pos[k - 1];
    Ok(scores
        .iter()
        .copied()
        .filter(|&s| s > cut)
        .min_by(f64::total_cmp)
        .unwrap_or_else(|| cut.next_up()))
}
