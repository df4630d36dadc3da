use crate::error::{Error, Result};
use crate::scalar::Real;

/// Rates of the two-state (unleaked/leaked) model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoStateRates<T> {
    pub p_leak: T,
    pub p_seep: T,
    pub p01: T,
    pub p10: T,
}

/// Scalar form of the two-state filter: only `pi0 = P(unleaked)` is stored.
///
/// Per step this is one fused multiply-add for the prior and one division
/// for the Bayes update, cheap enough to run beside a decoder every cycle.
#[derive(Clone, Copy, Debug)]
pub struct OnlineTwoState<T> {
    slope: T,
    offset: T,
    /// `[B(o|unleaked), B(o|leaked)]` for o = +1 and o = -1.
    emit: [[T; 2]; 2],
}

impl<T: Real> OnlineTwoState<T> {
    pub fn new(rates: TwoStateRates<T>) -> Self {
        let one = T::one();
        let a00 = one - rates.p_leak;
        let a01 = rates.p_seep;
        Self {
            slope: a00 - a01,
            offset: a01,
            emit: [[one - rates.p01, rates.p10], [rates.p01, one - rates.p10]],
        }
    }

    #[inline]
    pub fn update(&self, pi0: T, obs: usize) -> Result<T> {
        let prior = self.slope * pi0 + self.offset;
        let [b0, b1] = self.emit[obs.min(1)];
        let num = prior * b0;
        let denom = num + (T::one() - prior) * b1;
        if !(denom >= T::likelihood_floor()) {
            return Err(Error::ZeroLikelihood {
                round: 0,
                symbol: obs,
            });
        }
        Ok(num / denom)
    }
}

/// One step of the scalar recursion on `pi0 = P(unleaked)`.
pub fn online_two_state_update<T: Real>(rates: TwoStateRates<T>, pi0: T, obs: usize) -> Result<T> {
    if obs > 1 {
        return Err(Error::UnknownSymbol {
            symbol: obs,
            alphabet: 2,
        });
    }
    OnlineTwoState::new(rates).update(pi0, obs)
}

/// Equilibrium leaked population `p_leak / (p_leak + p_seep)`.
pub fn steady_state_leakage<T: Real>(p_leak: T, p_seep: T) -> Result<T> {
    let total = p_leak + p_seep;
    if !(total > T::zero()) {
        return Err(Error::ZeroRates);
    }
    Ok(p_leak / total)
}
