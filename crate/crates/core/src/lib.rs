//! Timing synchronization with conjugated Zadoff-Chu pairs.
//!
//! A transmitter sends a unit-modulus sequence `x` in one period and its
//! complex conjugate `x*` in the next. A carrier frequency offset shifts the
//! direct-correlator peak of `x` and of `x*` by the same amount in opposite
//! directions, so averaging the two argmax estimates cancels the bias.
//!
//! Modules:
//!
//! - [`signal`]: chirp and ZC generators, conjugation, periodic frames.
//! - [`channel`]: integer delay, complex gain, CFO phase ramp and AWGN.
//! - [`detect`]: direct, M-part and differential correlators plus timing
//!   estimators.
//! - [`analysis`]: closed-form correlator magnitudes for chirps, sensitivity
//!   sweeps, lobe checks, worst-case peak bound and energy loss.
//! - [`sim`]: Monte Carlo timing-error-rate experiment.

pub mod analysis;
pub mod channel;
pub mod detect;
pub mod error;
pub mod signal;
pub mod sim;

pub use error::{Error, Result};
pub use num_complex::Complex64;
