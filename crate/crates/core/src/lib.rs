//! Numerical laboratory for approximate commutants of Haar random unitaries.
//!
//! The crate is `no_std` with `alloc`. Everything here is a pure function of
//! its inputs and an explicit [`RngStream`]; file formats, configuration and
//! replicate farms live in the `freeness-lab` companion crate.
//!
//! Module map:
//!
//! * [`linalg`]: dense complex matrices, the normalized trace and norms,
//!   phase-sorted eigendecomposition of unitaries.
//! * [`haar`]: Ginibre and Haar sampling, empirical spectral distributions and
//!   the arc-mass neighbourhood test.
//! * [`coupling`]: the coupled families `U_j = V_j B_j V_j*` and their residual
//!   certificates against the reference diagonal.
//! * [`band`]: circular band patterns, the block band projection and covering
//!   bounds.
//! * [`freeness`]: alternating words, noncommutative polynomials, adversarial
//!   approximate commutants and the uniform freeness error budget.
//! * [`concentration`]: Herbst tail bounds and empirical tail frequencies.
//! * [`stats`]: small summary statistics shared by the experiments.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod band;
pub mod concentration;
pub mod coupling;
mod error;
pub mod freeness;
pub mod haar;
pub mod linalg;
mod math;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use linalg::{c64, ComplexMatrix, UnitaryEigenSystem, UnitaryMatrix};
pub use rng::RngStream;

/// Default tolerance on `‖U*U − I‖₂` for [`UnitaryMatrix`].
pub const UNITARITY_TOL: f64 = 1e-10;

/// Default tolerance on the reconstruction residual of an eigendecomposition.
pub const EIG_TOL: f64 = 1e-8;
