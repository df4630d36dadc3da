use crate::error::{Error, Result};
use crate::hmm::spec::{Assembled, HmmSpec};
use crate::scalar::{pairwise_sum, Real};

/// Filtered distribution after `round` observations.
///
/// At round 0 `posterior` holds the prior for the first observation, which is
/// used as-is rather than propagated through the transition matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterState<T> {
    pub round: usize,
    pub posterior: Vec<T>,
    pub log_likelihood: T,
}

impl<T: Real> FilterState<T> {
    pub fn leaked_probability(&self, leaked_mask: &[bool]) -> T {
        self.posterior
            .iter()
            .zip(leaked_mask)
            .filter(|(_, &l)| l)
            .map(|(&p, _)| p)
            .sum()
    }
}

impl<T: Real> Assembled<T> {
    pub fn start(&self) -> FilterState<T> {
        FilterState {
            round: 0,
            posterior: self.prior.clone(),
            log_likelihood: T::zero(),
        }
    }

    pub(crate) fn check_symbol(&self, obs: usize) -> Result<()> {
        if obs >= self.n_outputs() {
            return Err(Error::UnknownSymbol {
                symbol: obs,
                alphabet: self.n_outputs(),
            });
        }
        Ok(())
    }

    /// Markov evolution followed by the Bayesian update on `obs`.
    pub fn forward_step(&self, state: &FilterState<T>, obs: usize) -> Result<FilterState<T>> {
        let mut next = state.clone();
        let mut scratch = vec![T::zero(); self.n_states()];
        self.step_in_place(&mut next, obs, &mut scratch)?;
        Ok(next)
    }

    pub(crate) fn step_in_place(
        &self,
        state: &mut FilterState<T>,
        obs: usize,
        scratch: &mut [T],
    ) -> Result<()> {
        self.check_symbol(obs)?;
        if state.round == 0 {
            scratch.copy_from_slice(&state.posterior);
        } else {
            self.transition.mul_vec_into(&state.posterior, scratch);
        }
        let emit = self.output.row(obs);
        for (q, &b) in scratch.iter_mut().zip(emit) {
            *q = *q * b;
        }
        let norm = pairwise_sum(scratch);
        if !(norm >= T::likelihood_floor()) {
            return Err(Error::ZeroLikelihood {
                round: state.round + 1,
                symbol: obs,
            });
        }
        for (p, &u) in state.posterior.iter_mut().zip(scratch.iter()) {
            *p = u / norm;
        }
        state.round += 1;
        state.log_likelihood = state.log_likelihood + norm.ln();
        Ok(())
    }

    /// Runs the filter over a whole sequence starting from the prior.
    pub fn filter(&self, obs_seq: &[usize]) -> Result<FilterState<T>> {
        let mut state = self.start();
        let mut scratch = vec![T::zero(); self.n_states()];
        for &o in obs_seq {
            self.step_in_place(&mut state, o, &mut scratch)?;
        }
        Ok(state)
    }

    /// Log-probability of the sequence, accumulated as a sum of log-normalizers.
    pub fn sequence_log_likelihood(&self, obs_seq: &[usize]) -> Result<T> {
        if obs_seq.is_empty() {
            return Err(Error::EmptyInput("observation sequence"));
        }
        Ok(self.filter(obs_seq)?.log_likelihood)
    }
}

impl<T: Real> HmmSpec<T> {
    /// Convenience wrapper; assembles the matrices on every call.
    pub fn forward_step(&self, state: &FilterState<T>, obs: usize) -> Result<FilterState<T>> {
        self.assemble()?.forward_step(state, obs)
    }

    pub fn sequence_log_likelihood(&self, obs_seq: &[usize]) -> Result<T> {
        self.assemble()?.sequence_log_likelihood(obs_seq)
    }
}
