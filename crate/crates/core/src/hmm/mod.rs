//! Discrete-time hidden Markov model engine.
//!
//! A model is linearly parametrized: `A = A0 + sum_i p_i D_i` (and likewise
//! for the output matrix `B`), with every matrix column-stochastic in the
//! "column = current state" orientation. Filtering runs the usual two-stage
//! recursion (Markov evolution, then a Bayesian update on the observed
//! symbol) and accumulates the log of each normalizer, so sequences of any
//! practical length stay finite.

mod derivatives;
mod filter;
mod sampling;
mod spec;

pub use derivatives::{DerivativeModel, Derivatives};
pub use filter::FilterState;
pub use sampling::SampledSequence;
pub use spec::{Assembled, Generator, GeneratorKind, HmmSpec, Param};
