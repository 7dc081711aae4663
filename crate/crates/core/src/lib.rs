//! Churn-aware, guardrailed subscription pricing.

// Validation reads `!(x > 0.0)` so that NaN is rejected too; the dense
// kernels index several arrays in lockstep.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod backtest;
pub mod churn;
pub mod elasticity;
pub mod error;
pub mod forecast;
pub mod governance;
pub mod linalg;
pub mod num;
pub mod optimizer;
pub mod panel;
pub mod risk;
pub mod rng;
pub mod stats;
pub mod synthgen;

pub use error::{Error, Result};

pub use num::Real;

/// Scalar used throughout the modelling pipeline.
pub type Scalar = f64;
/// Dense vector of [`Scalar`]s.
pub type Vector = Vec<Scalar>;
/// Row-major dense matrix of [`Scalar`]s.
pub type Matrix = Vec<Vec<Scalar>>;
