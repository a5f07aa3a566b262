//! Desk-scale simulator and analysis toolkit for spatially multiplexed
//! two-mode-squeezed-vacuum secret sharing.
//!
//! The crate models a multi-channel quantum-optics key distribution bench:
//! it synthesizes correlated homodyne quadrature traces for any number of
//! probe/conjugate beam pairs, runs them through the measurement
//! post-processing chain (bandpass filter, slice integration, sign binning),
//! executes the N-party XOR secret sharing protocol over the resulting bit
//! streams, and validates squeezing, randomness, and agreement statistics.

pub mod dsp;
pub mod error;
pub mod gaussian;
pub mod psd;
pub mod randtests;
pub mod synth;

pub use error::{Error, Result};
