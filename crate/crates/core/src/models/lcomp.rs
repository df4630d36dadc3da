use crate::error::{Error, Result};
use crate::hmm::{Assembled, HmmSpec};
use crate::models::build::Role;
use crate::models::syndrome::ProtocolTag;
use crate::scalar::Real;

/// Filtered probability that the watched qubit stayed in the computational
/// subspace over the rounds the decoder relies on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComputationalLikelihood<T> {
    pub value: T,
    pub role: Role,
    /// Number of observations consumed.
    pub round: usize,
}

/// How many trailing hidden states must be unleaked.
///
/// Data qubits need the final round (ZZ) or the final two (ZZXX); the ancilla
/// needs one more round than the data qubits in each protocol.
pub fn unleaked_window(role: Role, protocol: ProtocolTag) -> usize {
    match (role, protocol) {
        (Role::Data, ProtocolTag::Zzxx) | (Role::Ancilla, ProtocolTag::Zz) => 2,
        (Role::Ancilla, ProtocolTag::Zzxx) => 3,
        _ => 1,
    }
}

impl<T: Real> Assembled<T> {
    /// `P(H[M-k+1..=M] all unleaked | o[1..=M])`, with `k` clipped to the sequence length.
    pub fn unleaked_tail_probability(&self, obs_seq: &[usize], k: usize) -> Result<T> {
        if obs_seq.is_empty() {
            return Err(Error::EmptyInput("observation sequence"));
        }
        let k = k.clamp(1, obs_seq.len());
        let split = obs_seq.len() - k + 1;
        let state = self.filter(&obs_seq[..split])?;
        let keep = |v: &mut [T]| {
            for (x, &leaked) in v.iter_mut().zip(&self.leaked_mask) {
                if leaked {
                    *x = T::zero();
                }
            }
        };
        let mut all = state.posterior.clone();
        let mut unleaked = state.posterior;
        keep(&mut unleaked);
        let mut scratch = vec![T::zero(); self.n_states()];
        for (offset, &o) in obs_seq[split..].iter().enumerate() {
            self.check_symbol(o)?;
            let emit = self.output.row(o);
            for v in [&mut all, &mut unleaked] {
                self.transition.mul_vec_into(v, &mut scratch);
                for ((x, &q), &b) in v.iter_mut().zip(&scratch).zip(emit) {
                    *x = q * b;
                }
            }
            keep(&mut unleaked);
            let norm: T = all.iter().copied().sum();
            if !(norm >= T::likelihood_floor()) {
                return Err(Error::ZeroLikelihood {
                    round: split + offset + 1,
                    symbol: o,
                });
            }
            for v in [&mut all, &mut unleaked] {
                for x in v.iter_mut() {
                    *x = *x / norm;
                }
            }
        }
        let value: T = unleaked.iter().copied().sum();
        Ok(value.max(T::zero()).min(T::one()))
    }

    pub fn computational_likelihood(
        &self,
        role: Role,
        protocol: ProtocolTag,
        obs_seq: &[usize],
    ) -> Result<ComputationalLikelihood<T>> {
        let value = self.unleaked_tail_probability(obs_seq, unleaked_window(role, protocol))?;
        Ok(ComputationalLikelihood {
            value,
            role,
            round: obs_seq.len(),
        })
    }
}

impl<T: Real> HmmSpec<T> {
    pub fn computational_likelihood(
        &self,
        role: Role,
        protocol: ProtocolTag,
        obs_seq: &[usize],
    ) -> Result<ComputationalLikelihood<T>> {
        self.assemble()?
            .computational_likelihood(role, protocol, obs_seq)
    }
}
