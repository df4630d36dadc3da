use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::scores::{lcomp_scores, tail_leaked};
use crate::error::{Error, Result};
use crate::hmm::HmmSpec;
use crate::models::Role;
use crate::sim::ShotRecord;

/// Reject runs whose `L_comp` for `role` falls below `threshold`.
#[derive(Clone, Debug)]
pub struct Mitigation {
    pub spec: HmmSpec<f64>,
    pub role: Role,
    pub threshold: f64,
}

impl Mitigation {
    /// Threshold reaching `tpr` on a labeled tuning set.
    pub fn tuned(spec: HmmSpec<f64>, role: Role, tuning: &[ShotRecord], tpr: f64) -> Result<Self> {
        let scores = lcomp_scores(tuning, &spec, role)?;
        let labels: Vec<bool> = tuning.iter().map(|r| tail_leaked(r, role)).collect();
        let threshold = super::roc::threshold_for_tpr(&scores, &labels, tpr)?;
        Ok(Self {
            spec,
            role,
            threshold,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub model: String,
    pub role: Role,
    pub threshold: f64,
    pub rejected: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostselectReport {
    /// Acceptance flag per record; ties at a threshold pass.
    pub keep: Vec<bool>,
    pub thresholds: Vec<ThresholdReport>,
    /// `(M, f_post)` pairs.
    pub f_post: Vec<(usize, f64)>,
}

impl PostselectReport {
    pub fn mean_f_post(&self) -> f64 {
        self.f_post.iter().map(|(_, f)| f).sum::<f64>() / self.f_post.len().max(1) as f64
    }
}

pub fn postselect(records: &[ShotRecord], mitigations: &[Mitigation]) -> Result<PostselectReport> {
    let mut keep = vec![true; records.len()];
    let mut thresholds = Vec::new();
    for mitigation in mitigations {
        let scores = lcomp_scores(records, &mitigation.spec, mitigation.role)?;
        let mut rejected = 0;
        for (k, &s) in keep.iter_mut().zip(&scores) {
            if s < mitigation.threshold {
                *k = false;
                rejected += 1;
            }
        }
        thresholds.push(ThresholdReport {
            model: mitigation.spec.name().to_string(),
            role: mitigation.role,
            threshold: mitigation.threshold,
            rejected,
        });
    }
    let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (r, &k) in records.iter().zip(&keep) {
        let e = counts.entry(r.rounds).or_default();
        e.0 += 1;
        e.1 += usize::from(k);
    }
    let mut f_post = Vec::with_capacity(counts.len());
    for (m, (n, kept)) in counts {
        if kept == 0 {
            return Err(Error::NoAcceptedShots(m));
        }
        f_post.push((m, kept as f64 / n as f64));
    }
    Ok(PostselectReport {
        keep,
        thresholds,
        f_post,
    })
}

/// Split of a postselection gain into the parts from rejecting truly leaked
/// runs and from rejecting unleaked ones.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainSplit {
    pub total: f64,
    pub from_leaked: f64,
    pub from_unleaked: f64,
}

/// `mean(kept) - mean(all)` written as a sum over rejected runs,
/// `sum_rejected (mean(kept) - v_i) / n`, grouped by the leak label.
pub fn gain_decomposition(values: &[f64], keep: &[bool], leaked: &[bool]) -> Option<GainSplit> {
    let kept: Vec<f64> = values.iter().zip(keep).filter(|(_, &k)| k).map(|(&v, _)| v).collect();
    if kept.is_empty() || values.is_empty() {
        return None;
    }
    let mean_kept = kept.iter().sum::<f64>() / kept.len() as f64;
    let n = values.len() as f64;
    let (mut from_leaked, mut from_unleaked) = (0.0, 0.0);
    for ((&v, &k), &l) in values.iter().zip(keep).zip(leaked) {
        if !k {
            let d = (mean_kept - v) / n;
            if l {
                from_leaked += d;
            } else {
                from_unleaked += d;
            }
        }
    }
    Some(GainSplit {
        total: from_leaked + from_unleaked,
        from_leaked,
        from_unleaked,
    })
}
