use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::hmm::spec::{Assembled, HmmSpec};
use crate::scalar::Real;

/// Hidden-state path and emitted symbols of one sampled run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampledSequence {
    pub hidden: Vec<usize>,
    pub observed: Vec<usize>,
}

fn draw<T: Real, R: Rng + ?Sized>(rng: &mut R, weights: impl Iterator<Item = T>) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        let w = w.to_f64().unwrap_or(0.0);
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    // Rounding left u just above the cumulative sum.
    last
}

impl<T: Real> Assembled<T> {
    pub fn sample_with<R: Rng + ?Sized>(&self, length: usize, rng: &mut R) -> SampledSequence {
        let mut hidden = Vec::with_capacity(length);
        let mut observed = Vec::with_capacity(length);
        let n_out = self.n_outputs();
        let mut h = draw(rng, self.prior.iter().copied());
        for m in 0..length {
            if m > 0 {
                h = draw(rng, self.transition.column(h).into_iter());
            }
            hidden.push(h);
            observed.push(draw(rng, (0..n_out).map(|o| self.output[(o, h)])));
        }
        SampledSequence { hidden, observed }
    }

    pub fn sample_sequence(&self, length: usize, seed: u64) -> SampledSequence {
        self.sample_with(length, &mut ChaCha8Rng::seed_from_u64(seed))
    }
}

impl<T: Real> HmmSpec<T> {
    /// Samples `length` rounds; deterministic given `seed`.
    pub fn sample_sequence(&self, length: usize, seed: u64) -> Result<SampledSequence> {
        Ok(self.assemble()?.sample_sequence(length, seed))
    }
}
