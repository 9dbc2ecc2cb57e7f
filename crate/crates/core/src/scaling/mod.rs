//! Diagonal scalings of M-matrices and the solvers built on them.
//!
//! Throughout, `A ≥ 0`, `M = sI − A` and `M_α = (1+α)sI − A`. A scaling pair
//! `(ℓ, r)` is certified when `diag(ℓ)·M_α·diag(r)` is RCDD, which in turn
//! certifies that `M_α` is a nonsingular M-matrix.

mod mscale;
mod richardson;
mod symmetric;

pub use mscale::{
    inner_iteration_cap, mmatrix_scale, mmatrix_scale_with, solve_from_scale, solve_from_scale_with, solve_m,
    solve_m_with,
};
pub(crate) use mscale::{run_phase, PhaseFailure, PhaseSpec};
pub use richardson::{prec_richardson, RichardsonConfig, ResidualNorm};
pub(crate) use richardson::richardson;
pub use symmetric::{factor_width2_solve, symm_scale, symm_scale_with, symm_solve, FactorWidthSolution};

use crate::rcdd::LinearOperator;
use crate::sparse::DenseVector;

/// Positive diagonal vectors certifying `diag(left)·M_alpha·diag(right)` RCDD,
/// where `M_alpha = (1+alpha)·s·I − A`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPair {
    pub left: DenseVector,
    pub right: DenseVector,
    /// Relative shift at which the pair was certified.
    pub alpha: f64,
    /// Diagonal shift of the original problem.
    pub s: f64,
}

/// Approximate inverses of `M` and `Mᵀ`, each with ℓ2 error bound `delta`.
#[derive(Debug, Clone)]
pub struct MSolveOperators {
    pub p_right: LinearOperator,
    pub p_left: LinearOperator,
    pub delta: f64,
}
