//! Finite-sample threshold breakdown points and m-sensitivities for
//! M-estimators of location and scale, two-stage estimators, plug-in
//! standard errors and the tests built on them.
//!
//! The numerical core is generic over the scalar type; population
//! computations, the bootstrap and the Z-system work in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod audit;
pub mod bootstrap;
pub mod estimators;
pub mod model;
pub mod oracle;
pub mod root;
pub mod score;
pub mod sensitivity;

use std::fmt::{Debug, Display};

/// Scalar type accepted by the generic layers: `f32` or `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumCast
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
}
impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("literal representable")
}

/// Converts a working scalar into `f64`.
#[inline]
pub fn to_f64<F: Real>(x: F) -> f64 {
    x.to_f64().expect("finite conversion")
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate scale: {0}")]
    DegenerateScale(String),
    #[error("degenerate information: {0}")]
    DegenerateInformation(String),
    #[error("numeric failure: {what} (residual {residual:e})")]
    Numeric { what: String, residual: f64 },
    #[error("extrapolation outside tabulated grid at t = {0}")]
    Extrapolation(f64),
    #[error("combinatorial budget exceeded: {0}")]
    Budget(String),
    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub mod tol {
    //! Tolerances shared across the crate.

    /// Relative tolerance on location roots.
    pub const THETA_REL: f64 = 1e-10;
    /// Weight normalization tolerance.
    pub const WEIGHTS: f64 = 1e-12;
    /// Iteration cap for bracketed bisection.
    pub const BISECT_MAX_ITER: usize = 400;
    /// Bracket growth cap, as a power of two times the initial spread.
    pub const BRACKET_DOUBLINGS: i32 = 60;
    /// Absolute tolerance for adaptive quadrature.
    pub const QUAD_ABS: f64 = 1e-12;
    /// Population root tolerance.
    pub const POP_ROOT: f64 = 1e-13;
}

pub use audit::{BudgetMode, Sided, TestAudit, TestData, TestKind, TestSpec};
pub use estimators::{FitResult, Sample, WeightedSample};
pub use score::{DerivConvention, ScaleScoreFamily, ScoreFamily, ScoreKind};
pub use sensitivity::{BoundKind, BreakdownResult, SensitivityCurve, SensitivityPoint, Side};

pub type Score = ScoreFamily<f64>;
pub type ScaleScore = ScaleScoreFamily<f64>;
pub type Sample64 = Sample<f64>;
pub type WeightedSample64 = WeightedSample<f64>;
pub type Score32 = ScoreFamily<f32>;
pub type Sample32 = Sample<f32>;
