//! Spectral diagnostics for radial Dirac operators whose potentials grow
//! without bound at infinity.
//!
//! The crate integrates the half-line channel systems, certifies boundedness
//! of solutions through an almost-monotone quadratic form, estimates
//! subordinacy ratios, locates discrete eigenvalues, and turns asymptotic
//! bounded-variation hypotheses into windowed numerical diagnostics.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod boundedness;
pub mod bvcalc;
pub mod coefficients;
pub mod error;
pub mod hypotheses;
pub mod ladder;
pub mod quadrature;
pub mod solver;
pub mod subordinacy;

pub use coefficients::{Channel, ChannelPoint, ChannelSystem, CoefficientModel, ConstantChannel, Profile, Structure};
pub use error::{Error, Result};
