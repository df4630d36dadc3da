//! Hidden Markov model leakage detection for repeated parity-check experiments.
//!
//! The crate is organised bottom-up: [`hmm`] holds the generic engine,
//! [`models`] the concrete leakage models, [`trainer`] the maximum-likelihood
//! fitter, [`sim`] the shot simulator and [`analysis`] the decoding,
//! fidelity and detector-evaluation pipeline.

pub mod analysis;
pub mod error;
pub mod hmm;
pub mod matrix;
pub mod models;
pub mod scalar;
pub mod sim;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision model specification.
pub type Hmm = hmm::HmmSpec<f64>;
/// Single-precision model specification.
pub type Hmm32 = hmm::HmmSpec<f32>;
/// Double-precision filter state.
pub type Filter = hmm::FilterState<f64>;
/// Double-precision assembled model.
pub type Model = hmm::Assembled<f64>;
