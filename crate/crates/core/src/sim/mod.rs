//! Stochastic simulation of the parity-check experiments.
//!
//! Two data qubits (DH, DL) share a Bell-state frame tracked by two bits:
//! `x` for the X⊗X eigenvalue and `z` for Z⊗Z. The ancilla is never reset, so
//! its bit accumulates the measured parities: `a <- a ^ s`.

mod idling;
mod onset;

pub use idling::{rates_for_decay, simulate_idling, IdlingCurve};
pub use onset::{leakage_onset_toy, onset_rate, published_onset_rate, OnsetToy};

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ProtocolTag, ANCILLA_LEAK_RATE};

/// Per-round error and leakage rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rates {
    /// Pauli rates per data qubit; X flips `z`, Z flips `x`, Y flips both.
    pub data_x: f64,
    pub data_y: f64,
    pub data_z: f64,
    /// Ancilla flip keyed by (previous bit, expected bit): 00, 01, 10, 11.
    pub ancilla_flip: [f64; 4],
    pub readout_flip: f64,
    /// Per data qubit.
    pub data_leak: f64,
    pub data_seep: f64,
    pub anc_leak: f64,
    pub anc_seep: f64,
}

/// Per-qubit rate whose two-qubit parity flips with probability `pair`.
fn per_qubit_flip(pair: f64) -> f64 {
    (1.0 - (1.0 - 2.0 * pair).sqrt()) / 2.0
}

/// Per-qubit rate whose either-qubit event has probability `pair`.
fn per_qubit_leak(pair: f64) -> f64 {
    1.0 - (1.0 - pair).sqrt()
}

impl Rates {
    /// Effective rates of the fitted detailed models.
    pub fn defaults(protocol: ProtocolTag) -> Self {
        match protocol {
            ProtocolTag::Zz | ProtocolTag::IdlingDd => {
                let f = per_qubit_flip(0.050);
                Self {
                    data_x: f,
                    data_y: 0.0,
                    data_z: f,
                    ancilla_flip: [0.028; 4],
                    readout_flip: 0.011,
                    data_leak: per_qubit_leak(0.0064),
                    data_seep: 0.108,
                    anc_leak: ANCILLA_LEAK_RATE,
                    anc_seep: 0.101,
                }
            }
            ProtocolTag::Zzxx => {
                let f = per_qubit_flip(0.030);
                Self {
                    data_x: f,
                    data_y: per_qubit_flip(0.014),
                    data_z: f,
                    ancilla_flip: [0.001, 0.021, 0.044, 0.058],
                    readout_flip: 0.027,
                    data_leak: per_qubit_leak(0.0064),
                    data_seep: 0.103,
                    anc_leak: ANCILLA_LEAK_RATE,
                    anc_seep: 0.101,
                }
            }
        }
    }

    pub fn noiseless() -> Self {
        Self {
            data_x: 0.0,
            data_y: 0.0,
            data_z: 0.0,
            ancilla_flip: [0.0; 4],
            readout_flip: 0.0,
            data_leak: 0.0,
            data_seep: 0.0,
            anc_leak: 0.0,
            anc_seep: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let named = [
            ("data_x", self.data_x),
            ("data_y", self.data_y),
            ("data_z", self.data_z),
            ("ancilla_flip[00]", self.ancilla_flip[0]),
            ("ancilla_flip[01]", self.ancilla_flip[1]),
            ("ancilla_flip[10]", self.ancilla_flip[2]),
            ("ancilla_flip[11]", self.ancilla_flip[3]),
            ("readout_flip", self.readout_flip),
            ("data_leak", self.data_leak),
            ("data_seep", self.data_seep),
            ("anc_leak", self.anc_leak),
            ("anc_seep", self.anc_seep),
        ];
        let bad: Vec<String> = named
            .iter()
            .filter(|(_, v)| !(0.0..=1.0).contains(v))
            .map(|(n, v)| format!("{n} = {v}"))
            .collect();
        if !bad.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "rates outside [0, 1]: {}",
                bad.join(", ")
            )));
        }
        if self.data_x + self.data_y + self.data_z > 1.0 {
            return Err(Error::InvalidConfig("data Pauli rates sum above 1".into()));
        }
        Ok(())
    }
}

impl Default for Rates {
    fn default() -> Self {
        Self::defaults(ProtocolTag::Zz)
    }
}

/// One round count or an explicit list of them (one independent run set per entry).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rounds {
    One(usize),
    Many(Vec<usize>),
}

impl Rounds {
    pub fn values(&self) -> Vec<usize> {
        match self {
            Rounds::One(m) => vec![*m],
            Rounds::Many(ms) => ms.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: ProtocolTag,
    pub rounds: Rounds,
    /// Shots per round count.
    pub shots: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rates: Option<Rates>,
    #[serde(default = "default_true")]
    pub echo_enabled: bool,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn new(protocol: ProtocolTag, rounds: usize, shots: usize, seed: u64) -> Self {
        Self {
            protocol,
            rounds: Rounds::One(rounds),
            shots,
            seed,
            rates: Some(Rates::defaults(protocol)),
            echo_enabled: true,
        }
    }

    pub fn rates(&self) -> Rates {
        self.rates
            .clone()
            .unwrap_or_else(|| Rates::defaults(self.protocol))
    }

    pub fn validate(&self) -> Result<()> {
        let rounds = self.rounds.values();
        if rounds.is_empty() || rounds.contains(&0) {
            return Err(Error::InvalidConfig("every round count must be at least 1".into()));
        }
        if self.shots == 0 {
            return Err(Error::InvalidConfig("shots must be at least 1".into()));
        }
        self.rates().validate()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truth {
    pub dh: Vec<bool>,
    pub dl: Vec<bool>,
    pub anc: Vec<bool>,
}

impl Truth {
    pub fn data_leaked(&self, m: usize) -> bool {
        self.dh[m] || self.dl[m]
    }
}

/// Final Bell-frame eigenvalues before any decoder correction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub x: i8,
    pub z: i8,
    pub depol: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub protocol: ProtocolTag,
    #[serde(rename = "M")]
    pub rounds: usize,
    pub m_a: Vec<i8>,
    pub truth: Truth,
    pub frame: Frame,
    /// Z⊗Z eigenvalue the first check projected onto (X⊗X starts random too under ZZXX).
    pub proj: i8,
}

/// Forces a leakage event regardless of the sampled rates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForcedLeak {
    DataHigh(usize),
    DataLow(usize),
    Ancilla(usize),
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of shot `index` among the runs with `rounds` checks.
pub fn shot_seed(seed: u64, rounds: usize, index: usize) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ rounds as u64) ^ index as u64)
}

fn pm(bit: bool) -> i8 {
    if bit {
        -1
    } else {
        1
    }
}

struct Qubit {
    leaked: bool,
    since: usize,
}

impl Qubit {
    fn new() -> Self {
        Self {
            leaked: false,
            since: 0,
        }
    }
}

pub fn simulate_run(config: &ExperimentConfig, rounds: usize, seed: u64) -> ShotRecord {
    simulate_run_forced(config, rounds, seed, &[])
}

/// [`simulate_run`] with leakage events injected at fixed rounds.
pub fn simulate_run_forced(
    config: &ExperimentConfig,
    rounds: usize,
    seed: u64,
    forced: &[ForcedLeak],
) -> ShotRecord {
    let r = config.rates();
    let protocol = config.protocol;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = rng.random_bool(0.5);
    let mut x = protocol == ProtocolTag::Zzxx && rng.random_bool(0.5);
    let proj = pm(z);
    let mut a = false;
    let mut data = [Qubit::new(), Qubit::new()];
    let mut anc = Qubit::new();
    let mut m_a = Vec::with_capacity(rounds);
    let mut truth = Truth {
        dh: Vec::with_capacity(rounds),
        dl: Vec::with_capacity(rounds),
        anc: Vec::with_capacity(rounds),
    };
    let p_xy = r.data_x + r.data_y;

    for m in 0..rounds {
        for _ in data.iter().filter(|q| !q.leaked) {
            let u: f64 = rng.random();
            if u < r.data_x {
                z = !z;
            } else if u < p_xy {
                z = !z;
                x = !x;
            } else if u < p_xy + r.data_z {
                x = !x;
            }
        }

        for (k, q) in data.iter_mut().enumerate() {
            let force = forced.iter().any(|f| {
                matches!((f, k), (ForcedLeak::DataHigh(fm), 0) | (ForcedLeak::DataLow(fm), 1) if *fm == m)
            });
            if q.leaked {
                if !force && rng.random_bool(r.data_seep) {
                    q.leaked = false;
                    x = rng.random_bool(0.5);
                    z = rng.random_bool(0.5);
                }
            } else if force || rng.random_bool(r.data_leak) {
                q.leaked = true;
                q.since = m;
            }
        }
        let force_anc = forced.contains(&ForcedLeak::Ancilla(m));
        if anc.leaked {
            if !force_anc && rng.random_bool(r.anc_seep) {
                anc.leaked = false;
                a = true;
            }
        } else if force_anc || rng.random_bool(r.anc_leak) {
            anc.leaked = true;
            anc.since = m;
        }

        let reported = if anc.leaked {
            a = true;
            true
        } else {
            let xx_check = protocol == ProtocolTag::Zzxx && m % 2 == 1;
            let mut s = if xx_check { x } else { z };
            if let Some(onset) = data.iter().filter(|q| q.leaked).map(|q| q.since).min() {
                match protocol {
                    ProtocolTag::Zzxx => s = rng.random_bool(0.5),
                    _ if config.echo_enabled => s ^= (m - onset) % 2 == 1,
                    _ => {}
                }
            }
            let prev = a;
            a ^= s;
            if rng.random_bool(r.ancilla_flip[2 * usize::from(prev) + usize::from(a)]) {
                a = !a;
            }
            a ^ rng.random_bool(r.readout_flip)
        };
        m_a.push(pm(reported));
        truth.dh.push(data[0].leaked);
        truth.dl.push(data[1].leaked);
        truth.anc.push(anc.leaked);
    }

    ShotRecord {
        protocol,
        rounds,
        m_a,
        frame: Frame {
            x: pm(x),
            z: pm(z),
            depol: data.iter().any(|q| q.leaked),
        },
        truth,
        proj,
    }
}

/// Per-round leak fractions and the first-outcome split of a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub shots: usize,
    /// Leak fractions at each round of the longest runs.
    pub rounds: usize,
    pub data_leaked: Vec<f64>,
    pub dh_leaked: Vec<f64>,
    pub dl_leaked: Vec<f64>,
    pub anc_leaked: Vec<f64>,
    /// Fraction of records whose first outcome is +1.
    pub first_even: f64,
}

impl DatasetSummary {
    pub fn of(records: &[ShotRecord]) -> Self {
        let rounds = records.iter().map(|r| r.rounds).max().unwrap_or(0);
        let longest: Vec<&ShotRecord> = records.iter().filter(|r| r.rounds == rounds).collect();
        let frac = |f: &dyn Fn(&ShotRecord, usize) -> bool| -> Vec<f64> {
            (0..rounds)
                .map(|m| {
                    longest.iter().filter(|r| f(r, m)).count() as f64 / longest.len() as f64
                })
                .collect()
        };
        let first_even = records.iter().filter(|r| r.m_a.first() == Some(&1)).count() as f64
            / records.len().max(1) as f64;
        Self {
            shots: records.len(),
            rounds,
            data_leaked: frac(&|r, m| r.truth.data_leaked(m)),
            dh_leaked: frac(&|r, m| r.truth.dh[m]),
            dl_leaked: frac(&|r, m| r.truth.dl[m]),
            anc_leaked: frac(&|r, m| r.truth.anc[m]),
            first_even,
        }
    }
}

/// All shots of `config`, ordered by round count then shot index.
pub fn simulate_dataset(config: &ExperimentConfig) -> Result<(Vec<ShotRecord>, DatasetSummary)> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = config
        .rounds
        .values()
        .into_iter()
        .flat_map(|m| (0..config.shots).map(move |i| (m, i)))
        .collect();
    let records: Vec<ShotRecord> = jobs
        .par_iter()
        .map(|&(m, i)| simulate_run(config, m, shot_seed(config.seed, m, i)))
        .collect();
    let summary = DatasetSummary::of(&records);
    Ok((records, summary))
}

pub fn write_jsonl<W: Write>(mut out: W, records: &[ShotRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: std::io::BufRead>(input: R) -> Result<Vec<ShotRecord>> {
    let mut records = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ShotRecord = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidConfig(format!("record {}: {e}", n + 1)))?;
        if record.m_a.len() != record.rounds || record.m_a.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidConfig(format!(
                "record {}: m_a must hold M values of +1 or -1",
                n + 1
            )));
        }
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::syndrome_from_measurements;

    fn noiseless(protocol: ProtocolTag) -> ExperimentConfig {
        ExperimentConfig {
            rates: Some(Rates::noiseless()),
            ..ExperimentConfig::new(protocol, 5, 1, 0)
        }
    }

    #[test]
    fn noiseless_stabilization() {
        for protocol in [ProtocolTag::Zz, ProtocolTag::Zzxx] {
            let config = noiseless(protocol);
            for m in 1..=64 {
                for seed in 0..4 {
                    let r = simulate_run(&config, m, seed);
                    assert_eq!(r.frame.z, r.proj);
                    if protocol == ProtocolTag::Zz {
                        assert_eq!(r.frame.x, 1);
                    }
                    assert!(!r.frame.depol);
                    if m >= 4 {
                        assert!(syndrome_from_measurements(protocol, &r.m_a).unwrap().all_clear());
                    }
                    if protocol == ProtocolTag::Zz && r.proj == 1 {
                        assert!(r.m_a.iter().all(|&v| v == 1));
                    }
                }
            }
        }
    }

    #[test]
    fn forced_data_leak_gives_repeated_syndromes() {
        let config = noiseless(ProtocolTag::Zz);
        let r = simulate_run_forced(&config, 12, 4, &[ForcedLeak::DataHigh(3)]);
        let s = syndrome_from_measurements(ProtocolTag::Zz, &r.m_a).unwrap();
        for (j, &v) in s.values.iter().enumerate() {
            let m = j + s.start;
            assert_eq!(v, if m >= 4 { -1 } else { 1 }, "round {m}");
        }
        assert!(r.truth.dh[3] && !r.truth.dh[2] && r.frame.depol);
    }

    #[test]
    fn forced_ancilla_leak_reports_minus_one() {
        let config = noiseless(ProtocolTag::Zz);
        let r = simulate_run_forced(&config, 10, 2, &[ForcedLeak::Ancilla(4)]);
        assert!(r.m_a[4..].iter().all(|&v| v == -1));
        assert!(r.truth.anc[4..].iter().all(|&l| l));
        assert!(!r.frame.depol);
    }

    #[test]
    fn seepage_returns_ancilla_to_one() {
        let mut config = noiseless(ProtocolTag::Zz);
        config.rates.as_mut().unwrap().anc_seep = 1.0;
        for seed in 0..20 {
            let r = simulate_run_forced(&config, 8, seed, &[ForcedLeak::Ancilla(2)]);
            assert!(!r.truth.anc[3]);
            let expect = r.m_a[2] * pm(r.proj == -1);
            assert_eq!(r.m_a[3], expect);
        }
    }

    #[test]
    fn zzxx_leaked_checks_are_coins() {
        let config = noiseless(ProtocolTag::Zzxx);
        let n = 10_000;
        let mut minus = 0;
        for seed in 0..n {
            let r = simulate_run_forced(&config, 8, seed, &[ForcedLeak::DataLow(0)]);
            let s = syndrome_from_measurements(ProtocolTag::Zzxx, &r.m_a).unwrap();
            minus += usize::from(s.values[s.values.len() - 1] == -1);
        }
        let frac = minus as f64 / n as f64;
        assert!((frac - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn leak_onset_rate_is_geometric() {
        let mut config = ExperimentConfig::new(ProtocolTag::Zz, 1, 20_000, 5);
        let mut rates = Rates::noiseless();
        rates.data_leak = 0.05;
        config.rates = Some(rates);
        let (records, summary) = simulate_dataset(&config).unwrap();
        assert_eq!(records.len(), 20_000);
        let p = 1.0 - 0.95f64 * 0.95;
        let sigma = (p * (1.0 - p) / 20_000.0).sqrt();
        assert!((summary.data_leaked[0] - p).abs() < 3.0 * sigma);
        assert!((summary.dh_leaked[0] - 0.05).abs() < 3.0 * (0.05 * 0.95 / 20_000f64).sqrt());
    }

    #[test]
    fn dataset_is_deterministic_and_round_trips() {
        let mut config = ExperimentConfig::new(ProtocolTag::Zzxx, 6, 30, 11);
        config.rounds = Rounds::Many(vec![4, 6]);
        let (a, _) = simulate_dataset(&config).unwrap();
        let (b, _) = simulate_dataset(&config).unwrap();
        let mut bytes_a = Vec::new();
        let mut bytes_b = Vec::new();
        write_jsonl(&mut bytes_a, &a).unwrap();
        write_jsonl(&mut bytes_b, &b).unwrap();
        assert_eq!(bytes_a, bytes_b);
        assert_eq!(read_jsonl(bytes_a.as_slice()).unwrap(), a);
        let first = String::from_utf8(bytes_a).unwrap();
        let line = first.lines().next().unwrap();
        assert!(line.starts_with(r#"{"protocol":"zzxx","M":4,"m_a":["#));
        assert!(line.contains(r#""truth":{"dh":["#) && line.contains(r#""frame":{"x":"#));
    }

    #[test]
    fn invalid_rates_are_enumerated() {
        let mut config = ExperimentConfig::new(ProtocolTag::Zz, 3, 1, 0);
        let mut rates = Rates::noiseless();
        rates.data_leak = 1.5;
        rates.anc_seep = -0.1;
        config.rates = Some(rates);
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("data_leak") && err.contains("anc_seep"));
    }
}
