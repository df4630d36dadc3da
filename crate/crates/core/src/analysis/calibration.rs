use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lo: f64,
    pub hi: f64,
    pub n_exp: usize,
    pub n_model: usize,
    /// Mean `L_comp` of the experimental shots in the bin.
    pub mean_lcomp: Option<f64>,
    /// Fraction of labeled experimental shots that were unleaked.
    pub unleaked_frac: Option<f64>,
    /// Binomial standard error of `unleaked_frac` under perfect calibration.
    pub sigma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub bins: Vec<CalibrationBin>,
    /// Total-variation distance between the two normalized histograms.
    pub tv_distance: f64,
}

impl Calibration {
    /// Largest `|unleaked_frac - mean_lcomp| / sigma` over bins with at least `min_count` shots.
    pub fn worst_deviation(&self, min_count: usize) -> f64 {
        self.bins
            .iter()
            .filter(|b| b.n_exp >= min_count)
            .filter_map(|b| match (b.unleaked_frac, b.mean_lcomp, b.sigma) {
                (Some(f), Some(l), Some(s)) if s > 0.0 => Some((f - l).abs() / s),
                (Some(f), Some(l), _) => Some(if f == l { 0.0 } else { f64::INFINITY }),
                _ => None,
            })
            .fold(0.0, f64::max)
    }
}

fn bin_of(x: f64, bins: usize) -> usize {
    ((x.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1)
}

/// Equal-width bins on `[0, 1]`; empty bins are kept.
pub fn calibration(
    scores: &[f64],
    unleaked: Option<&[bool]>,
    model_scores: &[f64],
    bins: usize,
) -> Calibration {
    let bins = bins.max(1);
    let mut out: Vec<CalibrationBin> = (0..bins)
        .map(|k| CalibrationBin {
            lo: k as f64 / bins as f64,
            hi: (k + 1) as f64 / bins as f64,
            n_exp: 0,
            n_model: 0,
            mean_lcomp: None,
            unleaked_frac: None,
            sigma: None,
        })
        .collect();
    let mut sum_l = vec![0.0; bins];
    let mut var = vec![0.0; bins];
    let mut hits = vec![0usize; bins];
    for (i, &s) in scores.iter().enumerate() {
        let k = bin_of(s, bins);
        out[k].n_exp += 1;
        sum_l[k] += s;
        var[k] += s * (1.0 - s);
        if unleaked.is_some_and(|u| u[i]) {
            hits[k] += 1;
        }
    }
    for &s in model_scores {
        out[bin_of(s, bins)].n_model += 1;
    }
    for (k, b) in out.iter_mut().enumerate() {
        if b.n_exp > 0 {
            let n = b.n_exp as f64;
            b.mean_lcomp = Some(sum_l[k] / n);
            b.sigma = Some(var[k].sqrt() / n);
            if unleaked.is_some() {
                b.unleaked_frac = Some(hits[k] as f64 / n);
            }
        }
    }
    let total_exp = scores.len().max(1) as f64;
    let total_model = model_scores.len().max(1) as f64;
    let tv_distance = out
        .iter()
        .map(|b| (b.n_exp as f64 / total_exp - b.n_model as f64 / total_model).abs())
        .sum::<f64>()
        / 2.0;
    Calibration {
        bins: out,
        tv_distance,
    }
}
