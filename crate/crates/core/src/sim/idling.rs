use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pm, shot_seed, ExperimentConfig, Rates};
use crate::error::{Error, Result};
use crate::models::ProtocolTag;

/// Bell-state correlators after `m` idle rounds, for `m = 0..=M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdlingCurve {
    pub m: Vec<usize>,
    pub xx: Vec<f64>,
    pub yy: Vec<f64>,
    pub zz: Vec<f64>,
}

/// Evolves the frame under data Pauli errors only.
pub fn simulate_idling(config: &ExperimentConfig) -> Result<IdlingCurve> {
    if config.protocol != ProtocolTag::IdlingDd {
        return Err(Error::ProtocolMismatch(format!(
            "idling needs protocol idling_dd, got {}",
            config.protocol
        )));
    }
    config.validate()?;
    let rounds = config.rounds.values().into_iter().max().unwrap_or(0);
    let r = config.rates();
    let per_shot: Vec<Vec<(i8, i8)>> = (0..config.shots)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(shot_seed(config.seed, rounds, i));
            let (mut x, mut z) = (false, false);
            let mut out = vec![(1, 1)];
            for _ in 0..rounds {
                for _ in 0..2 {
                    let u: f64 = rng.random();
                    if u < r.data_x {
                        z = !z;
                    } else if u < r.data_x + r.data_y {
                        z = !z;
                        x = !x;
                    } else if u < r.data_x + r.data_y + r.data_z {
                        x = !x;
                    }
                }
                out.push((pm(x), pm(z)));
            }
            out
        })
        .collect();
    let n = config.shots as f64;
    let mean = |f: &dyn Fn((i8, i8)) -> i8, m: usize| -> f64 {
        per_shot.iter().map(|s| f64::from(f(s[m]))).sum::<f64>() / n
    };
    let ms: Vec<usize> = (0..=rounds).collect();
    Ok(IdlingCurve {
        xx: ms.iter().map(|&m| mean(&|(x, _)| x, m)).collect(),
        zz: ms.iter().map(|&m| mean(&|(_, z)| z, m)).collect(),
        yy: ms.iter().map(|&m| mean(&|(x, z)| -x * z, m)).collect(),
        m: ms,
    })
}

/// Data rates giving `<Z⊗Z> = exp(-M / upsilon_zz)` and `<X⊗X> = exp(-M / upsilon_xx)`.
pub fn rates_for_decay(upsilon_zz: f64, upsilon_xx: f64) -> Rates {
    let flip = |u: f64| (1.0 - (-1.0 / (2.0 * u)).exp()) / 2.0;
    Rates {
        data_x: flip(upsilon_zz),
        data_z: flip(upsilon_xx),
        ..Rates::noiseless()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Rounds;

    fn config(rates: Rates, shots: usize) -> ExperimentConfig {
        ExperimentConfig {
            protocol: ProtocolTag::IdlingDd,
            rounds: Rounds::One(20),
            shots,
            seed: 3,
            rates: Some(rates),
            echo_enabled: true,
        }
    }

    #[test]
    fn zero_rates_keep_correlations() {
        let c = simulate_idling(&config(Rates::noiseless(), 50)).unwrap();
        assert!(c.xx.iter().chain(&c.zz).all(|&v| v == 1.0));
        assert!(c.yy.iter().all(|&v| v == -1.0));
    }

    #[test]
    fn symmetric_flips_follow_closed_form() {
        let p = 0.02;
        let rates = Rates {
            data_x: p,
            data_z: p,
            ..Rates::noiseless()
        };
        let shots = 40_000;
        let c = simulate_idling(&config(rates, shots)).unwrap();
        for m in [1, 5, 10, 20] {
            let expect = (1.0 - 2.0 * p).powi(2 * m as i32);
            let sigma = ((1.0 - expect * expect) / shots as f64).sqrt();
            assert!((c.zz[m] - expect).abs() < 4.0 * sigma, "m={m}");
        }
    }

    #[test]
    fn decay_rates_round_trip() {
        let r = rates_for_decay(8.6, 12.8);
        let zz = (1.0 - 2.0 * r.data_x).powi(2 * 10);
        assert!((zz - (-10.0f64 / 8.6).exp()).abs() < 1e-12);
    }

    #[test]
    fn requires_idling_protocol() {
        let mut c = config(Rates::noiseless(), 1);
        c.protocol = ProtocolTag::Zz;
        assert!(matches!(simulate_idling(&c), Err(Error::ProtocolMismatch(_))));
    }
}
