//! Design, evaluation and genetic optimization of 64-APSK constellations and
//! their bit mappings.
//!
//! The crate is organised around the transmit chain:
//!
//! * [`geometry`]: ring layouts, label mappings, constellations and the
//!   symmetry-folded chromosomes the optimizer works on.
//! * [`channel`]: Saleh AM/AM amplifier, AWGN and maximum-likelihood
//!   demodulation.
//! * [`distortion`]: label distortion, Monte Carlo and quadrature MSE, and
//!   neighbour distortion tables for mapping analysis.
//! * [`ga`]: the genetic algorithm minimizing MSE.
//! * [`media`]: grey-level image payloads pushed through the channel.
//! * [`experiment`]: config-driven commands behind the `apsk64` binary.

pub mod channel;
pub mod distortion;
pub mod error;
pub mod experiment;
pub mod ga;
pub mod geometry;
pub mod media;
mod rng;

pub use error::{Error, Result};
