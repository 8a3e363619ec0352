//! Nonlinear shrinkage of sample covariance eigenvalues and Monte Carlo
//! verification of the resolvent local laws behind it.
//!
//! The crate is organized bottom-up:
//!
//! - [`spectral_core`]: population/sample spectra, matrix functions, indexed
//!   matrix algebra, Stieltjes transforms of atomic measures.
//! - [`mp_law`]: the self-consistent equation for `m(z)`, its boundary values
//!   on the real axis, the limiting densities and the control parameter `Ψ`.
//! - [`sampling`]: reproducible Gaussian data and sample covariance matrices.
//! - [`shrinkage`]: the shrinkage function `δ`, oracle/feasible/baseline
//!   estimators and the minimum-variance loss.
//! - [`resolvent_lab`]: the linearized Green function, its deterministic
//!   approximation, weighted traces, residuals and resolvent identities.
//! - [`measures`]: empirical vs deterministic spectral measures and interval
//!   distances.
//! - [`experiments`]: replicate sweeps, rate fits, dominance checks and run
//!   persistence.
//! - [`cli`]: the `lpshrink` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod measures;
pub mod mp_law;
mod quad;
pub mod resolvent_lab;
pub mod sampling;
pub mod shrinkage;
pub mod spectral_core;

pub use error::{Error, Result};
pub use spectral_core::{
    AtomicMeasure, Complex64, Field, ModelConfig, PopulationCovariance, PopulationSpectralMeasure,
    PsmAtom, SampleEigensystem, SpectralPoint,
};
