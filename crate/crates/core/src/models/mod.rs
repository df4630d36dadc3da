//! The concrete leakage models, syndrome transforms and L_comp queries.

mod build;
mod file;
mod lcomp;
mod online;
mod syndrome;

pub use build::{build_model, strip_leakage, ModelKind, Role, ANCILLA_LEAK_RATE, LEAKAGE_PARAMS};
pub use file::{ModelFile, ParamEntry};
pub use lcomp::{unleaked_window, ComputationalLikelihood};
pub use online::{online_two_state_update, steady_state_leakage, OnlineTwoState, TwoStateRates};
pub use syndrome::{symbol, syndrome_from_measurements, ProtocolTag, SyndromeSequence};

use crate::error::Result;

/// Observation symbols a model of `role` sees for one run of ancilla outcomes.
pub fn observations(role: Role, protocol: ProtocolTag, m_a: &[i8]) -> Result<Vec<usize>> {
    match role {
        Role::Data => Ok(syndrome_from_measurements(protocol, m_a)?.symbols()),
        Role::Ancilla => Ok(m_a.iter().map(|&v| symbol(v)).collect()),
    }
}

/// Round index (0-based, in ancilla-outcome time) of observation `j`.
pub fn observation_round(role: Role, protocol: ProtocolTag, j: usize) -> usize {
    match role {
        Role::Data => j + protocol.syndrome_span().unwrap_or(1) - 1,
        Role::Ancilla => j,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::HmmSpec;

    fn state(spec: &HmmSpec<f64>, label: &str) -> usize {
        spec.state_labels().iter().position(|l| l == label).unwrap()
    }

    #[test]
    fn detailed_state_counts() {
        let counts: Vec<usize> = [ModelKind::ZzD, ModelKind::ZzA, ModelKind::ZzxxD, ModelKind::ZzxxA]
            .into_iter()
            .map(|k| build_model::<f64>(k).n_states())
            .collect();
        assert_eq!(counts, vec![8, 6, 17, 12]);
    }

    #[test]
    fn every_model_assembles_at_defaults() {
        for kind in ModelKind::ALL {
            let spec = build_model::<f64>(kind);
            let a = spec.assemble().unwrap();
            for c in 0..spec.n_states() {
                assert!((a.transition.column_sum(c) - 1.0).abs() < 1e-12, "{kind} A col {c}");
                assert!((a.output.column_sum(c) - 1.0).abs() < 1e-12, "{kind} B col {c}");
            }
            for g in spec.generators() {
                for c in 0..spec.n_states() {
                    assert!(g.matrix.column_sum(c).abs() < 1e-15, "{kind} {}", g.name);
                }
            }
        }
    }

    #[test]
    fn zz_d_ancilla_error_state_decays() {
        let spec = build_model::<f64>(ModelKind::ZzD);
        let (a0, b0) = (spec.base_transition(), spec.base_output());
        let s03 = state(&spec, "(0,3)");
        let s01 = state(&spec, "(0,1)");
        let s00 = state(&spec, "(0,0)");
        assert_eq!(b0[(1, s03)], 1.0);
        assert_eq!(a0[(s01, s03)], 1.0);
        assert_eq!(b0[(1, s01)], 1.0);
        assert_eq!(a0[(s00, s01)], 1.0);
        assert_eq!(b0[(0, s00)], 1.0);
    }

    #[test]
    fn zz_d_paper_generator_entries() {
        let spec = build_model::<f64>(ModelKind::ZzD);
        let g = |name: &str| &spec.generators()[spec.param_index(name).unwrap()].matrix;
        let s = |l: &str| state(&spec, l);
        let anc = g("p_ancilla");
        assert_eq!(anc[(s("(0,0)"), s("(0,0)"))], -1.0);
        assert_eq!(anc[(s("(0,3)"), s("(0,0)"))], 1.0);
        assert_eq!(anc[(s("(0,1)"), s("(0,3)"))], -1.0);
        assert_eq!(anc[(s("(0,2)"), s("(0,3)"))], 1.0);
        let ro = g("p_readout");
        assert_eq!(ro[(s("(0,1)"), s("(0,2)"))], -1.0);
        assert_eq!(ro[(s("(0,3)"), s("(0,2)"))], 1.0);
        assert_eq!(ro[(s("(1,1)"), s("(1,2)"))], -1.0);
        let leak = g("p_leak");
        assert_eq!(leak[(s("(1,0)"), s("(0,2)"))], 0.5);
        assert_eq!(leak[(s("(1,1)"), s("(0,2)"))], 0.5);
    }

    #[test]
    fn zzxx_a_shuffles_labels() {
        let spec = build_model::<f64>(ModelKind::ZzxxA);
        let a0 = spec.base_transition();
        for s2 in 0..2 {
            let from = state(&spec, &format!("(0,1,{s2})"));
            let to = state(&spec, &format!("(1,{s2},1)"));
            assert_eq!(a0[(to, from)], 1.0);
        }
    }

    #[test]
    fn zz_a_follows_stabilizer() {
        let spec = build_model::<f64>(ModelKind::ZzA);
        let a0 = spec.base_transition();
        assert_eq!(a0[(state(&spec, "(1,1)"), state(&spec, "(0,1)"))], 1.0);
        assert_eq!(a0[(state(&spec, "(0,1)"), state(&spec, "(1,1)"))], 1.0);
        assert_eq!(a0[(state(&spec, "(1,0)"), state(&spec, "(1,0)"))], 1.0);
        assert_eq!(a0[(state(&spec, "(2,0)"), state(&spec, "(2,0)"))], 1.0);
        assert!(spec.params()[spec.param_index("p_leak").unwrap()].frozen);
    }

    #[test]
    fn zzxx_d_leaked_emission_is_coin() {
        let mut spec = build_model::<f64>(ModelKind::ZzxxD);
        spec.set_param("p_data_leaked", 0.5).unwrap();
        let b = spec.assemble().unwrap().output;
        assert_eq!(b[(0, 16)], 0.5);
        assert_eq!(b[(1, 16)], 0.5);
    }

    #[test]
    fn strip_leakage_freezes_at_zero() {
        let stripped = strip_leakage(&build_model::<f64>(ModelKind::ZzD));
        for name in ["p_leak", "p_seep", "p_data_leaked", "p_ancilla_leaked"] {
            let p = &stripped.params()[stripped.param_index(name).unwrap()];
            assert!(p.frozen && p.value == 0.0);
        }
        assert_eq!(stripped.n_free(), 3);
    }

    #[test]
    fn observation_streams() {
        let m_a = [1, 1, -1, -1, 1];
        assert_eq!(observations(Role::Ancilla, ProtocolTag::Zz, &m_a).unwrap(), vec![0, 0, 1, 1, 0]);
        assert_eq!(observations(Role::Data, ProtocolTag::Zz, &m_a).unwrap(), vec![1, 1, 1]);
        assert_eq!(observation_round(Role::Data, ProtocolTag::Zz, 0), 2);
        assert_eq!(observation_round(Role::Data, ProtocolTag::Zzxx, 0), 3);
    }
}
