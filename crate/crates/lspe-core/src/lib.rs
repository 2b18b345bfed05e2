//! Linear spectral estimation for phase retrieval.
//!
//! Measurements follow `y = |Ax + e^z|^2 + e^y` (elementwise square of a real
//! channel in the real case). A spectral estimate of `x` is the scaled leading
//! eigenvector of a data matrix `D_y` built from the preprocessed measurements.
//! This crate provides:
//!
//! * the minimal dense numeric kernel the estimators need (complex/real
//!   matrices, seeded reproducible RNG streams, SPD solves, power iteration),
//! * the Gaussian measurement model (iid / row-correlated / explicit sensing
//!   matrices, additive pre- and post-squaring noise),
//! * measurement preprocessors and the linear spectral estimators built from
//!   them, for which the mean-square matrix error `E‖D_y − xx^H‖²` is known in
//!   closed form, alongside the classical one-parameter spectral initializer
//!   and its optimal scale,
//! * analysis helpers: exact matrix-error expressions, the factor-4 bound on
//!   the rank-one (eigenvector) error, empirical Monte-Carlo counterparts, and
//!   a suite of moment-identity oracles used to validate the closed forms.
//!
//! The crate is `no_std` (with `alloc`); everything that touches files,
//! threads, or a terminal lives in the companion `lspe-kit` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod eig;
pub mod error;
pub mod estimator;
pub mod mat;
pub mod model;
pub mod preprocess;
pub mod rng;
pub mod solve;
pub mod sum;

pub use error::{Error, Result};
pub use mat::{FieldTag, HadamardMode, Mat};
pub use rng::Rng;
