//! A self-contained solver for convex cone programs of the form
//!
//! ```text
//! minimize    ½ xᵀ P x + qᵀ x
//! subject to  Aeq x = beq
//!             b_k − A_k x ∈ K_k      for every cone block k
//! ```
//!
//! where each `K_k` is a nonnegative orthant or a second-order cone.
//! The solver is an ADMM splitting that alternates a regularized KKT solve
//! with Euclidean projections onto the cones. It carries Ruiz equilibration,
//! adaptive step-size selection, infeasibility certificates and an optional
//! active-set polish for problems without second-order cones.

mod cone;
mod dump;
mod linsys;
mod polish;
mod program;
mod residual;
mod scaling;
mod solver;

pub mod builder;

pub use builder::{AffineExpr, ConstraintRef, ProgramBuilder, VarBlock};
pub use cone::Cone;
pub use program::{ConeBlock, ConicProgram, Triplets};
pub use residual::{residuals, Residuals};
pub use solver::{solve, solve_warm, Settings, SolveResult, SolveStatus, WarmStart};

use std::fmt;

use nalgebra::RealField;

/// Floating point scalar the solver (and everything built on it) is generic over.
pub trait Real: RealField + Copy + fmt::Display + fmt::LowerExp + Default + Send + Sync + 'static {
    fn lit(x: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Machine epsilon of the type.
    fn machine_epsilon() -> Self;
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn machine_epsilon() -> Self {
        f64::EPSILON
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn machine_epsilon() -> Self {
        f32::EPSILON
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConicError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("quadratic cost matrix is not symmetric positive semidefinite")]
    NotPositiveSemidefinite,
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("malformed program text: {0}")]
    Parse(String),
}

pub type Result<T, E = ConicError> = std::result::Result<T, E>;

pub(crate) fn inf_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}
