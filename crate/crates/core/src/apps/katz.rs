use super::{decide_subcritical, solve_m_adaptive};
use crate::error::{Error, Result};
use crate::report::SolveReport;
use crate::sparse::{DenseVector, SparseMatrix};

fn validate(a: &SparseMatrix, alpha: f64, b: &DenseVector, eps: f64) -> Result<()> {
    let n = a.require_square()?;
    a.require_nonnegative()?;
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    if b.iter().any(|&v| v < 0.0) || b.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidArgument("b must be nonnegative and nonzero".into()));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be nonnegative, got {alpha}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// Katz centrality `v = (I − αA)⁻¹b`.
///
/// Confirms `α·ρ(A) < 1` with the M-matrix decision first and returns
/// [`Error::DecayTooLarge`] when it is refuted. The result satisfies
/// `‖(I − αA)v − b‖₂ ≤ eps‖b‖₂`.
pub fn katz_centrality(a: &SparseMatrix, alpha: f64, b: &DenseVector, eps: f64) -> Result<(DenseVector, SolveReport)> {
    validate(a, alpha, b, eps)?;
    let scaled = a.scaled(alpha);
    if !decide_subcritical(&scaled)?.below {
        return Err(Error::DecayTooLarge);
    }
    let (x, report) = solve_m_adaptive(&scaled, 1.0, b, eps)?;
    Ok((DenseVector::new(x)?, report))
}

/// [`katz_centrality`] without the decision, for callers that already know
/// `α·ρ(A) < 1`. A wrong assertion surfaces as a solver error.
pub fn katz_centrality_unchecked(
    a: &SparseMatrix,
    alpha: f64,
    b: &DenseVector,
    eps: f64,
) -> Result<(DenseVector, SolveReport)> {
    validate(a, alpha, b, eps)?;
    let (x, report) = solve_m_adaptive(&a.scaled(alpha), 1.0, b, eps)?;
    Ok((DenseVector::new(x)?, report))
}
