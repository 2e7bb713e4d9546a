//! Level-set geometry of degenerate elliptic operators.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! below fix it to `f64`, which is what the CLI and the property suites use.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acdo;
pub mod counterexample;
pub mod error;
pub mod levelsets;
pub mod matrixineq;
pub mod operators;
pub mod sampling;
pub mod scalar;
pub mod suite;
pub mod symmat;

pub use error::{Error, Result};
pub use operators::{ExtReal, OperatorKind, OperatorSpec, Side};
pub use scalar::Scalar;

pub type SymMat = symmat::SymMat<f64>;
pub type SymMat32 = symmat::SymMat<f32>;
pub type Mat = symmat::Mat<f64>;
pub type EllipticOperator = operators::EllipticOperator<f64>;
pub type AcdoResult = acdo::AcdoResult<f64>;
pub type GapReport = acdo::GapReport<f64>;
pub type ExcessEstimate = levelsets::ExcessEstimate<f64>;
pub type ConditionReport = levelsets::ConditionReport<f64>;
pub type BlockPair = matrixineq::BlockPair<f64>;
pub type PlanePoint = counterexample::PlanePoint<f64>;
pub type GridFunction = counterexample::GridFunction<f64>;
pub type TouchingQuadratic = counterexample::TouchingQuadratic<f64>;
pub type Certificate = counterexample::Certificate<f64>;
