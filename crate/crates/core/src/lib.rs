//! Resonance-method toolkit for large values of `Re(e^{-i theta} log zeta(sigma + it))`.
//!
//! The crate builds the prime windows and square-free sets behind a
//! resonator, evaluates `zeta` and a branch-tracked `log zeta`, checks the
//! convolution identity that links them, and estimates the two moments whose
//! ratio lower-bounds the maximum.

pub mod convolution;
pub mod error;
pub mod moments;
pub mod numtheory;
pub mod params;
pub mod quad;
pub mod resonator;
pub mod search;
pub mod sets;
pub mod sum;
pub mod zeta;

pub use error::{Error, Result};
pub use params::{Params, RawParams};
