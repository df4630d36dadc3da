use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::{Generator, GeneratorKind, HmmSpec};
use crate::matrix::Mat;
use crate::models::syndrome::ProtocolTag;
use crate::scalar::Real;

/// Which qubit a model watches, and therefore what it observes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Observes the data-qubit syndrome `s_D`.
    Data,
    /// Observes the raw ancilla outcomes `M_A`.
    Ancilla,
}

impl std::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "data" | "d" => Ok(Role::Data),
            "ancilla" | "anc" | "a" => Ok(Role::Ancilla),
            other => Err(Error::InvalidConfig(format!("unknown role `{other}`"))),
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Role::Data => "data",
            Role::Ancilla => "ancilla",
        })
    }
}

/// The shipped models; `name()` values are stable CLI identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    SimpleZzD,
    SimpleZzA,
    SimpleZzxxD,
    SimpleZzxxA,
    ZzD,
    ZzA,
    ZzxxD,
    ZzxxA,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::SimpleZzD,
        ModelKind::SimpleZzA,
        ModelKind::SimpleZzxxD,
        ModelKind::SimpleZzxxA,
        ModelKind::ZzD,
        ModelKind::ZzA,
        ModelKind::ZzxxD,
        ModelKind::ZzxxA,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::SimpleZzD => "simple_zz_d",
            ModelKind::SimpleZzA => "simple_zz_a",
            ModelKind::SimpleZzxxD => "simple_zzxx_d",
            ModelKind::SimpleZzxxA => "simple_zzxx_a",
            ModelKind::ZzD => "zz_d",
            ModelKind::ZzA => "zz_a",
            ModelKind::ZzxxD => "zzxx_d",
            ModelKind::ZzxxA => "zzxx_a",
        }
    }

    pub fn protocol(self) -> ProtocolTag {
        match self {
            ModelKind::SimpleZzD | ModelKind::SimpleZzA | ModelKind::ZzD | ModelKind::ZzA => {
                ProtocolTag::Zz
            }
            _ => ProtocolTag::Zzxx,
        }
    }

    pub fn role(self) -> Role {
        match self {
            ModelKind::SimpleZzD | ModelKind::SimpleZzxxD | ModelKind::ZzD | ModelKind::ZzxxD => {
                Role::Data
            }
            _ => Role::Ancilla,
        }
    }

    pub fn is_simple(self) -> bool {
        matches!(
            self,
            ModelKind::SimpleZzD
                | ModelKind::SimpleZzA
                | ModelKind::SimpleZzxxD
                | ModelKind::SimpleZzxxA
        )
    }

    pub fn build<T: Real>(self) -> HmmSpec<T> {
        build_model(self)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownModel(s.to_string()))
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters that only describe leakage; freezing them at zero gives the
/// leakage-free comparison model.
pub const LEAKAGE_PARAMS: [&str; 5] = ["p_leak", "p_seep", "p_10", "p_data_leaked", "p_ancilla_leaked"];

/// Freezes every leakage parameter at zero. Simple models lose `p_10` too,
/// since it only shapes the leaked state's output.
pub fn strip_leakage<T: Real>(spec: &HmmSpec<T>) -> HmmSpec<T> {
    let mut out = spec.clone();
    for name in LEAKAGE_PARAMS {
        if out.param_index(name).is_ok() {
            out.freeze(name, T::zero()).expect("parameter exists");
        }
    }
    out
}

/// Ancilla leakage rate fixed by independent calibration.
pub const ANCILLA_LEAK_RATE: f64 = 0.0040;

/// Builds one of the shipped models at its default (fitted) parameter values.
pub fn build_model<T: Real>(kind: ModelKind) -> HmmSpec<T> {
    let spec = match kind {
        ModelKind::SimpleZzD => simple(kind, [0.0064, 0.108, 0.050, 0.155]),
        ModelKind::SimpleZzxxD => simple(kind, [0.0064, 0.103, 0.030, 1.0 - 0.489]),
        ModelKind::SimpleZzA => simple(kind, [ANCILLA_LEAK_RATE, 0.101, 0.5, 0.011]),
        ModelKind::SimpleZzxxA => simple(kind, [ANCILLA_LEAK_RATE, 0.101, 0.5, 0.027]),
        ModelKind::ZzD => zz_data(),
        ModelKind::ZzxxD => zzxx_data(),
        ModelKind::ZzA => zz_ancilla(),
        ModelKind::ZzxxA => zzxx_ancilla(),
    };
    spec.expect("shipped models satisfy the spec invariants")
}

fn labels(xs: impl IntoIterator<Item = String>) -> Vec<String> {
    xs.into_iter().collect()
}

fn pm_outputs() -> Vec<String> {
    vec!["+1".into(), "-1".into()]
}

/// Accumulates one generator entry by entry.
struct GenBuilder<T> {
    name: &'static str,
    kind: GeneratorKind,
    matrix: Mat<T>,
}

impl<T: Real> GenBuilder<T> {
    fn transition(name: &'static str, n: usize) -> Self {
        Self {
            name,
            kind: GeneratorKind::Transition,
            matrix: Mat::zeros(n, n),
        }
    }

    fn output(name: &'static str, n_out: usize, n: usize) -> Self {
        Self {
            name,
            kind: GeneratorKind::Output,
            matrix: Mat::zeros(n_out, n),
        }
    }

    fn add(&mut self, row: usize, col: usize, x: f64) {
        self.matrix[(row, col)] = self.matrix[(row, col)] + T::lit(x);
    }

    /// Moves the probability mass of `col` from `from` to a weighted set of targets.
    fn redirect(&mut self, col: usize, from: usize, to: &[(usize, f64)]) {
        self.add(from, col, -1.0);
        for &(r, w) in to {
            self.add(r, col, w);
        }
    }

    fn with(self, value: f64) -> (Generator<T>, T) {
        (
            Generator {
                name: self.name.to_string(),
                kind: self.kind,
                matrix: self.matrix,
            },
            T::lit(value),
        )
    }
}

fn simple<T: Real>(kind: ModelKind, [leak, seep, p01, p10]: [f64; 4]) -> Result<HmmSpec<T>> {
    let mut g_leak = GenBuilder::transition("p_leak", 2);
    g_leak.redirect(0, 0, &[(1, 1.0)]);
    let mut g_seep = GenBuilder::transition("p_seep", 2);
    g_seep.redirect(1, 1, &[(0, 1.0)]);
    let mut g01 = GenBuilder::output("p_01", 2, 2);
    g01.redirect(0, 0, &[(1, 1.0)]);
    let mut g10 = GenBuilder::output("p_10", 2, 2);
    g10.redirect(1, 1, &[(0, 1.0)]);
    HmmSpec::new(
        kind.name(),
        labels(["comp".to_string(), "leaked".to_string()]),
        pm_outputs(),
        Mat::identity(2),
        Mat::identity(2),
        vec![g_leak.with(leak), g_seep.with(seep), g01.with(p01), g10.with(p10)],
        vec![T::one(), T::zero()],
        vec![false, true],
    )
}

/// ZZ data model: `h = (h0, h1)` with `h0` the leak flag and `h1` two bits of
/// pending syndrome flips (bit 0 this round, bit 1 next round).
fn zz_data<T: Real>() -> Result<HmmSpec<T>> {
    const N: usize = 8;
    let idx = |h0: usize, h1: usize| h0 * 4 + h1;
    let mut a0 = Mat::zeros(N, N);
    let mut b0 = Mat::zeros(2, N);
    for h0 in 0..2 {
        for h1 in 0..4 {
            a0[(idx(h0, h1 / 2), idx(h0, h1))] = T::one();
            b0[((h0 + h1) % 2, idx(h0, h1))] = T::one();
        }
    }
    let mut leak = GenBuilder::transition("p_leak", N);
    let mut seep = GenBuilder::transition("p_seep", N);
    let mut data = GenBuilder::output("p_data", 2, N);
    let mut data_leaked = GenBuilder::output("p_data_leaked", 2, N);
    let mut readout = GenBuilder::transition("p_readout", N);
    let mut ancilla = GenBuilder::transition("p_ancilla", N);
    let mut ancilla_leaked = GenBuilder::transition("p_ancilla_leaked", N);
    for h1 in 0..4 {
        let next = h1 / 2;
        let (u, l) = (idx(0, h1), idx(1, h1));
        leak.redirect(u, idx(0, next), &[(idx(1, 0), 0.5), (idx(1, 1), 0.5)]);
        seep.redirect(l, idx(1, next), &[(idx(0, 0), 0.5), (idx(0, 1), 0.5)]);
        ancilla.redirect(u, idx(0, next), &[(idx(0, next ^ 3), 1.0)]);
        ancilla_leaked.redirect(l, idx(1, next), &[(idx(1, next ^ 3), 1.0)]);
        for h0 in 0..2 {
            readout.redirect(idx(h0, h1), idx(h0, next), &[(idx(h0, next ^ 2), 1.0)]);
        }
        let out_u = h1 % 2;
        data.redirect(u, out_u, &[(1 - out_u, 1.0)]);
        let out_l = (1 + h1) % 2;
        data_leaked.redirect(l, out_l, &[(1 - out_l, 1.0)]);
    }
    let mut prior = vec![T::zero(); N];
    prior[0] = T::one();
    HmmSpec::new(
        ModelKind::ZzD.name(),
        labels((0..2).flat_map(|h0| (0..4).map(move |h1| format!("({h0},{h1})")))),
        pm_outputs(),
        a0,
        b0,
        vec![
            leak.with(0.0064),
            seep.with(0.108),
            data.with(0.050),
            data_leaked.with(0.155),
            readout.with(0.004),
            ancilla.with(0.030),
            ancilla_leaked.with(0.113),
        ],
        prior,
        (0..N).map(|i| i >= 4).collect(),
    )
}

/// ZZXX data model: 16 unleaked states tracking four bits of pending syndrome
/// flips, plus one leaked state whose syndrome is a biased coin.
fn zzxx_data<T: Real>() -> Result<HmmSpec<T>> {
    const N: usize = 17;
    const LEAKED: usize = 16;
    let mut a0 = Mat::zeros(N, N);
    let mut b0 = Mat::zeros(2, N);
    for h1 in 0..16 {
        a0[(h1 / 2, h1)] = T::one();
        b0[(h1 % 2, h1)] = T::one();
    }
    a0[(LEAKED, LEAKED)] = T::one();
    b0[(0, LEAKED)] = T::one();

    let mut leak = GenBuilder::transition("p_leak", N);
    let mut seep = GenBuilder::transition("p_seep", N);
    let mut data = GenBuilder::output("p_data", 2, N);
    let mut data_leaked = GenBuilder::output("p_data_leaked", 2, N);
    let mut data_y = GenBuilder::transition("p_data_y", N);
    let mut readout = GenBuilder::transition("p_readout", N);
    let mut ancilla = GenBuilder::transition("p_ancilla", N);
    for h1 in 0..16 {
        let next = h1 / 2;
        leak.redirect(h1, next, &[(LEAKED, 1.0)]);
        data_y.redirect(h1, next, &[(next ^ 3, 1.0)]);
        readout.redirect(h1, next, &[(next ^ 15, 1.0)]);
        ancilla.redirect(h1, next, &[(next ^ 5, 1.0)]);
        data.redirect(h1, h1 % 2, &[(1 - h1 % 2, 1.0)]);
    }
    seep.redirect(LEAKED, LEAKED, &[(0, 0.5), (1, 0.5)]);
    data_leaked.redirect(LEAKED, 0, &[(1, 1.0)]);

    let mut prior = vec![T::zero(); N];
    prior[0] = T::one();
    HmmSpec::new(
        ModelKind::ZzxxD.name(),
        labels((0..16).map(|h1| format!("(0,{h1})")).chain(["leaked".to_string()])),
        pm_outputs(),
        a0,
        b0,
        vec![
            leak.with(0.0064),
            seep.with(0.103),
            data.with(0.030),
            data_leaked.with(0.489),
            data_y.with(0.014),
            readout.with(0.014),
            ancilla.with(0.029),
        ],
        prior,
        (0..N).map(|i| i == LEAKED).collect(),
    )
}

/// Error-free successor of an ancilla-model state `(a, s1, s2)`.
///
/// The ZZ model is the special case with one stabilizer (`s2 == s1`, no
/// shuffle); `shuffle` swaps the stabilizer labels each round for ZZXX.
fn ancilla_next(a: usize, s1: usize, s2: usize, shuffle: bool) -> (usize, usize, usize) {
    let a_next = if a < 2 { (a + s1) % 2 } else { 2 };
    if shuffle {
        (a_next, s2, s1)
    } else {
        (a_next, s1, s2)
    }
}

fn zz_ancilla<T: Real>() -> Result<HmmSpec<T>> {
    ancilla_model(ModelKind::ZzA, [0.101, 0.042, 0.011], [0.028; 4])
}

fn zzxx_ancilla<T: Real>() -> Result<HmmSpec<T>> {
    ancilla_model(ModelKind::ZzxxA, [0.101, 0.045, 0.027], [0.001, 0.021, 0.044, 0.058])
}

/// Ancilla models: `a` in {0, 1, 2 = leaked} is the ancilla state at
/// measurement, `s` (ZZ) or `(s1, s2)` (ZZXX) the stabilizer values.
fn ancilla_model<T: Real>(
    kind: ModelKind,
    [seep_rate, data_rate, readout_rate]: [f64; 3],
    anc_rates: [f64; 4],
) -> Result<HmmSpec<T>> {
    let two = kind == ModelKind::ZzxxA;
    let n_s = if two { 4 } else { 2 };
    let n = 3 * n_s;
    let stab = |s1: usize, s2: usize| if two { s1 * 2 + s2 } else { s1 };
    let idx = |(a, s1, s2): (usize, usize, usize)| a * n_s + stab(s1, s2);
    let stabilizers: Vec<(usize, usize)> = if two {
        vec![(0, 0), (0, 1), (1, 0), (1, 1)]
    } else {
        vec![(0, 0), (1, 1)]
    };
    let next = |a, s1, s2| idx(ancilla_next(a, s1, s2, two));
    let with_ancilla = |i: usize, a: usize| a * n_s + i % n_s;
    // Targets after a stabilizer flip: one label (ZZ) or either label with equal weight (ZZXX).
    let flipped = |a: usize, s1: usize, s2: usize, w: f64| -> Vec<(usize, f64)> {
        if two {
            vec![(next(a, 1 - s1, s2), w / 2.0), (next(a, s1, 1 - s2), w / 2.0)]
        } else {
            vec![(next(a, 1 - s1, 1 - s1), w)]
        }
    };

    let mut a0 = Mat::zeros(n, n);
    let mut b0 = Mat::zeros(2, n);
    for a in 0..3 {
        for &(s1, s2) in &stabilizers {
            a0[(next(a, s1, s2), idx((a, s1, s2)))] = T::one();
            b0[(usize::from(a > 0), idx((a, s1, s2)))] = T::one();
        }
    }

    let mut leak = GenBuilder::transition("p_leak", n);
    let mut seep = GenBuilder::transition("p_seep", n);
    let mut data = GenBuilder::transition("p_data", n);
    let mut readout = GenBuilder::output("p_readout", 2, n);
    let mut anc: Vec<GenBuilder<T>> = ["p_anc_00", "p_anc_01", "p_anc_10", "p_anc_11"]
        .into_iter()
        .map(|name| GenBuilder::transition(name, n))
        .collect();
    for a in 0..3 {
        for &(s1, s2) in &stabilizers {
            let col = idx((a, s1, s2));
            let target = next(a, s1, s2);
            data.redirect(col, target, &flipped(a, s1, s2, 1.0));
            let out = usize::from(a > 0);
            readout.redirect(col, out, &[(1 - out, 1.0)]);
            if a < 2 {
                let mut to = vec![(next(2, s1, s2), 0.5)];
                to.extend(flipped(2, s1, s2, 0.5));
                leak.redirect(col, target, &to);
                // Asymmetric ancilla flip keyed by (previous outcome, expected outcome).
                let expected = (a + s1) % 2;
                let (_, t1, t2) = ancilla_next(a, s1, s2, two);
                anc[a * 2 + expected].redirect(col, target, &[(idx((1 - expected, t1, t2)), 1.0)]);
            } else {
                // Seepage returns the ancilla to |1>, with the same stabilizer scrambling as leakage.
                let mut to = vec![(with_ancilla(target, 1), 0.5)];
                to.extend(flipped(2, s1, s2, 0.5).into_iter().map(|(r, w)| (with_ancilla(r, 1), w)));
                seep.redirect(col, target, &to);
            }
        }
    }

    let mut prior = vec![T::zero(); n];
    let first: Vec<usize> = stabilizers
        .iter()
        // Round 0 outcome equals the stabilizer measured first.
        .map(|&(s1, s2)| idx((if two { s2 } else { s1 }, s1, s2)))
        .collect();
    let w = T::one() / T::lit(first.len() as f64);
    for i in first {
        prior[i] = w;
    }

    let state_labels = (0..3)
        .flat_map(|a| {
            stabilizers.iter().map(move |&(s1, s2)| {
                if two {
                    format!("({a},{s1},{s2})")
                } else {
                    format!("({a},{s1})")
                }
            })
        })
        .collect();
    let mut gens = vec![
        leak.with(ANCILLA_LEAK_RATE),
        seep.with(seep_rate),
        data.with(data_rate),
        readout.with(readout_rate),
    ];
    gens.extend(anc.into_iter().zip(anc_rates).map(|(g, r)| g.with(r)));
    let mut spec = HmmSpec::new(
        kind.name(),
        state_labels,
        pm_outputs(),
        a0,
        b0,
        gens,
        prior,
        (0..n).map(|i| i >= 2 * n_s).collect(),
    )?;
    spec.freeze("p_leak", T::lit(ANCILLA_LEAK_RATE))?;
    Ok(spec)
}
