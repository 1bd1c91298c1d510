//! Copulas, shuffles of Min and Chatterjee's rank correlation ξ.
//!
//! Shuffles of Min have ξ = 1 yet approximate any copula uniformly. Mixing a
//! fine shuffle approximation of independence back into independence gives
//! laws with any prescribed ξ that are arbitrarily close to independence,
//! which is what the [`experiments`] use to probe tests and intervals built
//! on the rank estimator.

pub mod approx;
pub mod calibration;
pub mod copula;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod io;
pub mod quadrature;
pub mod rng;
pub mod sample;
pub mod xi;

pub use copula::parse::{parse_copula_spec, parse_copula_spec_in};
pub use copula::{Checkerboard, Copula, Fgm, Mixture, Orientation, Segment, ShuffleOfMin};
pub use error::{Error, Result};
pub use sample::PairedSample;
