//! Synthesis, simulation and analysis of two-dimensional continuous-variable
//! cluster states generated by multifrequency parametric pumping.
//!
//! * [`lattice`]: frequency combs and target square / honeycomb graphs.
//! * [`pumpsynth`]: pump schemes and the pairing graph they induce.
//! * [`gaussian`]: covariance matrices, symplectic evolution, loss, rotations.
//! * [`chain`]: synthetic measurement chain producing windowed samples.
//! * [`estimator`]: streaming covariance estimation and chain inversion.
//! * [`analysis`]: `(A, U)` extraction, nullifiers, hidden-entanglement ratio.
//!
//! The numerical modules are generic over [`Real`] (`f32` or `f64`); the
//! `*F64` aliases below fix the scalar for everyday use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod chain;
pub mod error;
pub mod estimator;
pub mod gaussian;
pub mod lattice;
pub mod pumpsynth;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CovarianceMatrixF64 = gaussian::CovarianceMatrix<f64>;
pub type CovarianceMatrixF32 = gaussian::CovarianceMatrix<f32>;
pub type GaussianStateF64 = gaussian::GaussianState<f64>;
pub type GaussianStateF32 = gaussian::GaussianState<f32>;
pub type CovarianceAccumulatorF64 = estimator::CovarianceAccumulator<f64>;
pub type CovarianceAccumulatorF32 = estimator::CovarianceAccumulator<f32>;
pub type WindowSamplesF64 = chain::WindowSamples<f64>;
pub type WindowSamplesF32 = chain::WindowSamples<f32>;
