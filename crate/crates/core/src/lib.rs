//! Backward-error diagnostics for dense linear solvers together with a
//! simplified roundoff model that predicts them.
//!
//! The model places all rounding on one intermediate result of an algorithm
//! (the inverse for naive solving, the factors for Gaussian elimination) and
//! turns the condition of the inverse stage into a priori bounds. The
//! [`diagnostics`] module evaluates those bounds next to the measured
//! normwise and componentwise backward errors.

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod extprec;
pub mod factor;
pub mod gallery;
pub mod matrix;
pub mod refine;
pub mod scalar;

pub use diagnostics::{ResidualMode, UNIT_ROUNDOFF, U_STAR};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, Report, Solver};
pub use extprec::{DoubleDouble, Rational};
pub use factor::{CholeskyFactor, LUFactors, PivotStrategy};
pub use gallery::TestInstance;
pub use matrix::{Matrix, Norm, Vector};
pub use refine::RefinementTrace;
