//! Self-adjointness and deficiency indices of one-dimensional Schrödinger
//! operators with δ-interactions, studied through their Jacobi matrices.
//!
//! A grid `x_n` with gaps `d_n` and strengths `α_n` determine a Jacobi
//! matrix `B`. The crate provides
//!
//! * [`grid`]: gap sequences, their summability and ratio statistics;
//! * [`jacobi`]: the matrix entries, the gauge sequence `r̃_n` and `ρ_n`;
//! * [`criteria`]: series and one-sided bound tests for self-adjointness;
//! * [`deficiency`]: the periodic-gauge deficiency test and a numerical
//!   recurrence oracle;
//! * [`report`] and [`battery`]: JSON probe records and reference checks.
//!
//! Everything is generic over [`Scalar`]; the `*64` aliases below fix `f64`.

pub mod battery;
pub mod criteria;
pub mod deficiency;
pub mod error;
pub mod grid;
pub mod jacobi;
pub mod numeric;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Grid64 = grid::GridSequence<f64>;
pub type Alpha64 = jacobi::AlphaSequence<f64>;
pub type Perturbation64 = jacobi::Perturbation<f64>;
pub type Operator64 = jacobi::JacobiOperator<f64>;
pub type Analysis64 = deficiency::DeficiencyAnalysis<f64>;
