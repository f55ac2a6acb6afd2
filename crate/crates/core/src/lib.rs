//! Block-structured Gaussian classification with discriminative-power
//! weighting.
//!
//! The crate models two-class populations whose features split into
//! independent blocks, each block Gaussian with a known, class-shared
//! covariance. It provides:
//!
//! - plug-in block-additive discriminants and their weighted form,
//! - the noncentral chi-square law of the per-block sample discriminative
//!   power, with the special functions and half-line quadrature behind it,
//! - asymptotic misclassification limits in the regime where the number of
//!   blocks grows proportionally to the training size, including the
//!   risk-optimal weight function,
//! - a seeded Monte Carlo harness for verifying those limits empirically.
//!
//! The numerical core ([`numerics`], [`risk`]) is generic over the scalar
//! type through [`real::Real`]; the model, classifier and simulation layers
//! work in `f64` (the [`Scalar`] alias), which is also what every file
//! format stores.

pub mod classifier;
pub mod dataset;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod real;
pub mod risk;

pub use error::{Error, Result};

/// Scalar type used by the model, classifier, simulation and I/O layers.
pub type Scalar = f64;

/// Power distribution over `f64`, the form every interface consumes.
pub type PowerDistribution = risk::PowerDistribution<Scalar>;

/// Asymptotic regime over `f64`.
pub type Regime = risk::Regime<Scalar>;

/// Quadrature configuration over `f64`.
pub type QuadratureConfig = numerics::QuadratureConfig<Scalar>;
