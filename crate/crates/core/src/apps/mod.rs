//! Applications of the M-matrix machinery.

mod katz;
mod kernel;
mod leontief;
mod singular;

pub use katz::{katz_centrality, katz_centrality_unchecked};
pub use kernel::{
    graph_kernel, indicator_similarity, load_labeled_graph, parse_labeled_graph, product_graph, KernelValue,
    LabeledGraph, ProductWeights,
};
pub use leontief::{leontief_equilibrium, LeontiefOutcome};
pub use singular::{top_singular, SingularTriplet};

use crate::error::{Error, Result};
use crate::perron::{m_decide, Witness};
use crate::report::{SolveReport, SolveStatus};
use crate::scaling::solve_m;
use crate::sparse::{norm2, SparseMatrix};

/// Shift below which the decisions stop halving. Small enough that the last
/// pass on `I − A` contracts whenever `1 − ρ(A)` is above roughly `1e-6`.
pub(crate) const DECISION_EPS: f64 = 1e-7;
/// Loose bound on `‖(I − A)⁻¹‖`; only sets the loop cap and budget.
pub(crate) const DECISION_GAMMA: f64 = 1e12;

/// Outcome of deciding `ρ(A) < 1` for a possibly reducible `A ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Subcritical {
    pub below: bool,
    /// Failing strongly connected component and its witness.
    pub failure: Option<(Vec<usize>, Option<Witness>)>,
}

/// Decides `ρ(A) < 1` component by component: `ρ(A)` is the largest spectral
/// radius over the diagonal blocks of the strongly connected components.
pub(crate) fn decide_subcritical(a: &SparseMatrix) -> Result<Subcritical> {
    let norms = a.induced_norms();
    if norms.norm_1.min(norms.norm_inf) < 1.0 {
        return Ok(Subcritical {
            below: true,
            failure: None,
        });
    }
    for comp in a.strongly_connected_components() {
        let block = a.principal_submatrix(&comp);
        if comp.len() == 1 {
            if block.get(0, 0) >= 1.0 {
                return Ok(Subcritical {
                    below: false,
                    failure: Some((comp, None)),
                });
            }
            continue;
        }
        let out = m_decide(&block, DECISION_EPS, DECISION_GAMMA)?;
        if !out.is_m_matrix() {
            return Ok(Subcritical {
                below: false,
                failure: Some((comp, out.witness)),
            });
        }
    }
    Ok(Subcritical {
        below: true,
        failure: None,
    })
}

const MAX_K_DOUBLINGS: u32 = 40;

/// Solves `(sI − A)x = b` to `‖(sI − A)x − b‖₂ ≤ eps‖b‖₂`, doubling the
/// conditioning guess `K` until the scaling and the refinement both succeed.
///
/// `ρ(A) < s` is assumed, not checked; when it fails the doubling runs out
/// and [`Error::KCapExceeded`] is returned.
pub fn solve_m_adaptive(a: &SparseMatrix, s: f64, b: &[f64], eps: f64) -> Result<(Vec<f64>, SolveReport)> {
    let n = b.len();
    if norm2(b) == 0.0 {
        return Ok((vec![0.0; n], SolveReport::converged()));
    }
    if a.nnz() == 0 {
        return Ok((b.iter().map(|v| v / s).collect(), SolveReport::converged()));
    }
    let mut k = 1.0;
    let mut total = 0;
    for _ in 0..=MAX_K_DOUBLINGS {
        let attempt = solve_m(a, s, eps, k).and_then(|p| p.call(b));
        match attempt {
            Ok((x, call)) => {
                total += call.iterations;
                let residual: Vec<f64> = a.shifted_mul(s, &x, false).iter().zip(b).map(|(p, q)| p - q).collect();
                return Ok((
                    x,
                    SolveReport {
                        status: SolveStatus::Converged,
                        iterations: total,
                        residuals: vec![norm2(&residual) / norm2(b)],
                        phases: Vec::new(),
                    },
                ));
            }
            Err(Error::IterationCapHit { .. })
            | Err(Error::ScalingRejected { .. })
            | Err(Error::BackendDiverged { .. })
            | Err(Error::NotRcdd) => k *= 2.0,
            Err(e) => return Err(e),
        }
    }
    Err(Error::KCapExceeded)
}
