use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean detection trajectory of the two-state toy with `n_a` watching ancillas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnsetToy {
    pub p: f64,
    pub n_a: usize,
    pub p_leak: f64,
    /// `(1 - p_leak) / p_leak`.
    pub amplitude: f64,
    /// Per-round decay of `L_comp` implied by the exact Bayes rule.
    pub lambda: f64,
    /// The rate as printed in closed form, see [`published_onset_rate`].
    pub lambda_published: f64,
    /// Rounds `1..=M`.
    pub m: Vec<usize>,
    /// Mean `L_comp` over leaked runs.
    pub mean_lcomp: Vec<f64>,
    /// Mean `log(L_comp / (1 - L_comp))` over leaked runs.
    pub mean_log_odds: Vec<f64>,
    /// Least-squares decay rate of `mean_log_odds`.
    pub fitted_slope: f64,
}

/// `log(2^-n p^(-n/2) (1-p)^(-n/2))`: the expected per-round drop in log-odds.
pub fn onset_rate(p: f64, n_a: usize) -> f64 {
    let n = n_a as f64;
    -n * 2f64.ln() - 0.5 * n * (p.ln() + (1.0 - p).ln())
}

/// `log(2^n p^(-n/2) (1-p)^(-n/2))`, the closed form quoted with the toy model.
///
/// It differs from [`onset_rate`] by `2 n log 2`.
pub fn published_onset_rate(p: f64, n_a: usize) -> f64 {
    onset_rate(p, n_a) + 2.0 * n_a as f64 * 2f64.ln()
}

/// Simulates `shots` leaked runs: the qubit leaks at round 1, after which
/// each of the `n_a` ancillas flags with probability 1/2 per round instead of `p`.
pub fn leakage_onset_toy(
    p: f64,
    n_a: usize,
    p_leak: f64,
    rounds: usize,
    shots: usize,
    seed: u64,
) -> Result<OnsetToy> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::InvalidConfig(format!("error rate {p} outside (0, 0.5)")));
    }
    if n_a == 0 || rounds < 2 || shots == 0 {
        return Err(Error::InvalidConfig(
            "need n_a >= 1, at least two rounds and one shot".into(),
        ));
    }
    if !(p_leak > 0.0 && p_leak < 1.0) {
        return Err(Error::InvalidConfig(format!("p_leak {p_leak} outside (0, 1)")));
    }
    let amplitude = (1.0 - p_leak) / p_leak;
    let (flag, quiet) = ((p / 0.5).ln(), ((1.0 - p) / 0.5).ln());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum_l = vec![0.0; rounds];
    let mut sum_odds = vec![0.0; rounds];
    for _ in 0..shots {
        let mut odds = amplitude.ln();
        for m in 0..rounds {
            for _ in 0..n_a {
                odds += if rng.random_bool(0.5) { flag } else { quiet };
            }
            sum_l[m] += 1.0 / (1.0 + (-odds).exp());
            sum_odds[m] += odds;
        }
    }
    let n = shots as f64;
    let m: Vec<usize> = (1..=rounds).collect();
    let mean_log_odds: Vec<f64> = sum_odds.iter().map(|s| s / n).collect();
    let xs: Vec<f64> = m.iter().map(|&v| v as f64).collect();
    let x_bar = xs.iter().sum::<f64>() / xs.len() as f64;
    let y_bar = mean_log_odds.iter().sum::<f64>() / xs.len() as f64;
    let sxy: f64 = xs
        .iter()
        .zip(&mean_log_odds)
        .map(|(x, y)| (x - x_bar) * (y - y_bar))
        .sum();
    let sxx: f64 = xs.iter().map(|x| (x - x_bar).powi(2)).sum();
    Ok(OnsetToy {
        p,
        n_a,
        p_leak,
        amplitude,
        lambda: onset_rate(p, n_a),
        lambda_published: published_onset_rate(p, n_a),
        m,
        mean_lcomp: sum_l.iter().map(|s| s / n).collect(),
        mean_log_odds,
        fitted_slope: -sxy / sxx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_closed_form() {
        let v = published_onset_rate(0.05, 2);
        assert!((v - (4.0f64 / (0.05 * 0.95)).ln()).abs() < 1e-12);
        assert!((v - 4.4332).abs() < 1e-3);
    }

    #[test]
    fn even_odds_amplitude_is_one() {
        let toy = leakage_onset_toy(0.05, 2, 0.5, 5, 10, 1).unwrap();
        assert_eq!(toy.amplitude, 1.0);
    }

    #[test]
    fn slope_tracks_bayes_rate_and_doubles_with_neighbours() {
        let one = leakage_onset_toy(0.05, 2, 0.01, 20, 4000, 2).unwrap();
        let two = leakage_onset_toy(0.05, 4, 0.01, 20, 4000, 3).unwrap();
        assert!((one.fitted_slope / one.lambda - 1.0).abs() < 0.1);
        assert!((two.fitted_slope / one.fitted_slope - 2.0).abs() < 0.2);
        assert!(one.mean_lcomp[19] < one.mean_lcomp[0]);
    }

    #[test]
    fn rejects_out_of_range_rates() {
        assert!(leakage_onset_toy(0.5, 1, 0.1, 5, 1, 0).is_err());
        assert!(leakage_onset_toy(0.0, 1, 0.1, 5, 1, 0).is_err());
    }
}
