use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::decode::{decode, DecodeStrategy};
use crate::error::{Error, Result};
use crate::sim::ShotRecord;

/// Correlators and fidelity at one round count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub m: usize,
    pub shots: usize,
    pub accepted: usize,
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub fidelity: f64,
    pub f_post: f64,
    pub sem_xx: f64,
    pub sem_yy: f64,
    pub sem_zz: f64,
    pub sem_fidelity: f64,
}

/// Per-shot `(xx, yy, zz)` after decoding; depolarized frames give zeros.
pub fn shot_correlators(record: &ShotRecord, strategy: DecodeStrategy) -> Result<Option<[f64; 3]>> {
    let d = decode(record, strategy)?;
    if !d.accepted {
        return Ok(None);
    }
    Ok(Some(match d.corrected(record) {
        Some((x, z)) => [f64::from(x), -f64::from(x * z), f64::from(z)],
        None => [0.0; 3],
    }))
}

fn mean_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Averages over accepted shots at each round count. `keep` applies an extra
/// acceptance mask (for example leakage postselection) aligned with `records`.
pub fn curves(
    records: &[ShotRecord],
    strategy: DecodeStrategy,
    keep: Option<&[bool]>,
) -> Result<Vec<CurvePoint>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    let mut groups: BTreeMap<usize, (usize, Vec<[f64; 3]>)> = BTreeMap::new();
    for (i, record) in records.iter().enumerate() {
        let entry = groups.entry(record.rounds).or_default();
        entry.0 += 1;
        if keep.is_some_and(|k| !k[i]) {
            continue;
        }
        if let Some(c) = shot_correlators(record, strategy)? {
            entry.1.push(c);
        }
    }
    groups
        .into_iter()
        .map(|(m, (shots, values))| {
            if values.is_empty() {
                return Err(Error::NoAcceptedShots(m));
            }
            let column = |k: usize| values.iter().map(|v| v[k]).collect::<Vec<f64>>();
            let (xx, sem_xx) = mean_sem(&column(0));
            let (yy, sem_yy) = mean_sem(&column(1));
            let (zz, sem_zz) = mean_sem(&column(2));
            let f: Vec<f64> = values.iter().map(|v| (1.0 + v[0] - v[1] + v[2]) / 4.0).collect();
            let (fidelity, sem_fidelity) = mean_sem(&f);
            Ok(CurvePoint {
                m,
                shots,
                accepted: values.len(),
                xx,
                yy,
                zz,
                fidelity,
                f_post: values.len() as f64 / shots as f64,
                sem_xx,
                sem_yy,
                sem_zz,
                sem_fidelity,
            })
        })
        .collect()
}

/// Curve-level standard errors from `subsets` interleaved splits of the shots.
pub fn subset_sem(
    records: &[ShotRecord],
    strategy: DecodeStrategy,
    keep: Option<&[bool]>,
    subsets: usize,
) -> Result<Vec<[f64; 4]>> {
    let parts: Vec<Vec<CurvePoint>> = (0..subsets.max(2))
        .map(|s| {
            let idx: Vec<usize> = (0..records.len()).filter(|i| i % subsets.max(2) == s).collect();
            let part: Vec<ShotRecord> = idx.iter().map(|&i| records[i].clone()).collect();
            let mask: Option<Vec<bool>> = keep.map(|k| idx.iter().map(|&i| k[i]).collect());
            curves(&part, strategy, mask.as_deref())
        })
        .collect::<Result<_>>()?;
    let n = parts.len() as f64;
    Ok((0..parts[0].len())
        .map(|j| {
            let sem = |f: &dyn Fn(&CurvePoint) -> f64| {
                let vals: Vec<f64> = parts.iter().map(|p| f(&p[j])).collect();
                let mean = vals.iter().sum::<f64>() / n;
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            };
            [
                sem(&|p| p.xx),
                sem(&|p| p.yy),
                sem(&|p| p.zz),
                sem(&|p| p.fidelity),
            ]
        })
        .collect())
}
