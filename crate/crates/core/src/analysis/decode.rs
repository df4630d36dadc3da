use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{syndrome_from_measurements, ProtocolTag};
use crate::sim::ShotRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeStrategy {
    /// Frame from the first check (ZZ) or first pair (ZZXX).
    First,
    /// Frame from the last two (ZZ) or three (ZZXX) outcomes.
    Final,
    /// Frame of the first projection, accepting only runs with no syndrome flagged.
    NoError,
}

impl std::str::FromStr for DecodeStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(Self::First),
            "final" => Ok(Self::Final),
            "no_error" | "no-error" => Ok(Self::NoError),
            other => Err(Error::InvalidConfig(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Accept flag and Pauli-frame update. `flip_z` comes from an X correction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decision {
    pub accepted: bool,
    pub flip_x: bool,
    pub flip_z: bool,
}

impl Decision {
    /// Corrected `(X⊗X, Z⊗Z)` eigenvalues, or `None` for a depolarized frame.
    pub fn corrected(&self, record: &ShotRecord) -> Option<(i8, i8)> {
        if record.frame.depol {
            return None;
        }
        let sign = |flip: bool| if flip { -1 } else { 1 };
        Some((
            record.frame.x * sign(self.flip_x),
            record.frame.z * sign(self.flip_z),
        ))
    }
}

/// Outcome bit of round `m`, with a virtual `0` before the first round.
fn bit(m_a: &[i8], m: isize) -> bool {
    m >= 0 && m_a[m as usize] == -1
}

/// Parities `(x, z)` inferred from the parity check at `m` and the one before it.
fn zzxx_parities(m_a: &[i8], m: isize) -> (bool, bool) {
    let latest = bit(m_a, m) ^ bit(m_a, m - 1);
    let previous = bit(m_a, m - 1) ^ bit(m_a, m - 2);
    if m % 2 == 0 {
        (previous, latest)
    } else {
        (latest, previous)
    }
}

pub fn decode(record: &ShotRecord, strategy: DecodeStrategy) -> Result<Decision> {
    let m_a = &record.m_a;
    let needed = match record.protocol {
        ProtocolTag::Zz => 1,
        ProtocolTag::Zzxx => 2,
        ProtocolTag::IdlingDd => {
            return Err(Error::ProtocolMismatch("idling records carry no checks".into()))
        }
    };
    if m_a.len() < needed {
        return Err(Error::SequenceTooShort {
            needed,
            got: m_a.len(),
        });
    }
    let first = match record.protocol {
        ProtocolTag::Zz => (false, bit(m_a, 0)),
        _ => zzxx_parities(m_a, 1),
    };
    let last = m_a.len() as isize - 1;
    let ((flip_x, flip_z), accepted) = match strategy {
        DecodeStrategy::First => (first, true),
        DecodeStrategy::Final => match record.protocol {
            ProtocolTag::Zz => ((false, bit(m_a, last) ^ bit(m_a, last - 1)), true),
            _ => (zzxx_parities(m_a, last), true),
        },
        DecodeStrategy::NoError => {
            let span = record.protocol.syndrome_span().unwrap_or(1);
            let clear = m_a.len() < span
                || syndrome_from_measurements(record.protocol, m_a)?.all_clear();
            (first, clear)
        }
    };
    Ok(Decision {
        accepted,
        flip_x,
        flip_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Frame, Truth};

    fn record(protocol: ProtocolTag, m_a: Vec<i8>) -> ShotRecord {
        let n = m_a.len();
        ShotRecord {
            protocol,
            rounds: n,
            m_a,
            truth: Truth {
                dh: vec![false; n],
                dl: vec![false; n],
                anc: vec![false; n],
            },
            frame: Frame {
                x: 1,
                z: 1,
                depol: false,
            },
            proj: 1,
        }
    }

    #[test]
    fn final_zz_reads_last_pair() {
        let even = decode(&record(ProtocolTag::Zz, vec![-1, 1, 1]), DecodeStrategy::Final).unwrap();
        assert!(!even.flip_z && even.accepted);
        let odd = decode(&record(ProtocolTag::Zz, vec![1, 1, -1]), DecodeStrategy::Final).unwrap();
        assert!(odd.flip_z && !odd.flip_x);
    }

    #[test]
    fn final_is_local_to_last_outcomes() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for (protocol, keep) in [(ProtocolTag::Zz, 2), (ProtocolTag::Zzxx, 3)] {
            for len in [5usize, 8, 9] {
                let tail: Vec<i8> = (0..keep).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
                let mut reference = None;
                for _ in 0..50 {
                    let mut m_a: Vec<i8> =
                        (0..len - keep).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
                    m_a.extend(&tail);
                    let d = decode(&record(protocol, m_a), DecodeStrategy::Final).unwrap();
                    let key = (d.flip_x, d.flip_z);
                    assert_eq!(*reference.get_or_insert(key), key);
                }
            }
        }
    }

    #[test]
    fn no_error_matches_pairwise_products() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let m_a: Vec<i8> = (0..6).map(|_| if rng.random_bool(0.2) { -1 } else { 1 }).collect();
            let expect = (2..6).all(|m| m_a[m] * m_a[m - 2] == 1);
            let d = decode(&record(ProtocolTag::Zz, m_a), DecodeStrategy::NoError).unwrap();
            assert_eq!(d.accepted, expect);
        }
    }

    #[test]
    fn zzxx_first_pair_reads_both_parities() {
        // ZZ odd at round 0, XX odd at round 1: bits 1 then 1^1 = 0.
        let d = decode(&record(ProtocolTag::Zzxx, vec![-1, 1, 1, -1]), DecodeStrategy::First).unwrap();
        assert!(d.flip_z && d.flip_x);
        assert!(matches!(
            decode(&record(ProtocolTag::Zzxx, vec![1]), DecodeStrategy::Final),
            Err(Error::SequenceTooShort { .. })
        ));
    }
}
