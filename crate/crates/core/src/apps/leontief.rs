use super::{solve_m_adaptive, DECISION_EPS, DECISION_GAMMA};
use crate::error::{Error, Result};
use crate::perron::{m_decide, Witness};
use crate::report::SolveReport;
use crate::sparse::{DenseVector, SparseMatrix};

/// Verdict and equilibrium of an input-output system.
#[derive(Debug, Clone, PartialEq)]
pub struct LeontiefOutcome {
    /// Whether `I − A` is a nonsingular M-matrix (the Hawkins–Simons condition).
    pub verdict: bool,
    /// Production vector `x` with `(I − A)x ≈ d`, when the verdict holds and `d` was given.
    pub x: Option<DenseVector>,
    pub witness: Option<Witness>,
    pub report: SolveReport,
}

/// Checks the Hawkins–Simons condition for an irreducible technology matrix
/// `A ≥ 0` and, if it holds, solves `(I − A)x = d` to
/// `‖(I − A)x − d‖₂ ≤ eps‖d‖₂`.
///
/// Reducible `A` is rejected with [`Error::NotIrreducible`].
pub fn leontief_equilibrium(a: &SparseMatrix, d: Option<&DenseVector>, eps: f64) -> Result<LeontiefOutcome> {
    let n = a.require_square()?;
    a.require_nonnegative()?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    if let Some(d) = d {
        if d.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: d.len(),
            });
        }
        if d.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument("demand must be nonnegative".into()));
        }
    }
    if !a.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    let decision = m_decide(a, DECISION_EPS.min(eps), DECISION_GAMMA)?;
    if !decision.is_m_matrix() {
        return Ok(LeontiefOutcome {
            verdict: false,
            x: None,
            witness: decision.witness,
            report: decision.report,
        });
    }
    let (x, report) = match d {
        Some(d) => {
            let (x, report) = solve_m_adaptive(a, 1.0, d, eps)?;
            (Some(DenseVector::new(x)?), report)
        }
        None => (None, decision.report),
    };
    Ok(LeontiefOutcome {
        verdict: true,
        x,
        witness: None,
        report,
    })
}
