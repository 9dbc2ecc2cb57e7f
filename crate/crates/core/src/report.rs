//! Iteration bookkeeping shared by the iterative routines.

/// Outcome of an iterative loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    /// The loop stopped at its iteration cap; the best iterate was kept.
    IterationCapHit { phase: usize },
}

/// Per-phase record of a halving-shift loop.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReport {
    pub alpha: f64,
    pub iterations: usize,
    pub cap: usize,
    /// `(min, max)` of `M_α r` at phase exit.
    pub right_window: (f64, f64),
    /// `(min, max)` of `M_αᵀ ℓ` at phase exit.
    pub left_window: (f64, f64),
    /// Residual norms observed inside the phase, one per iteration plus the start.
    pub residuals: Vec<f64>,
}

/// Iteration counts, residual histories and status of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub phases: Vec<PhaseReport>,
}

impl SolveReport {
    pub fn converged() -> Self {
        Self {
            status: SolveStatus::Converged,
            iterations: 0,
            residuals: Vec::new(),
            phases: Vec::new(),
        }
    }

    pub fn is_converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// Total inner iterations across phases plus top-level iterations.
    pub fn total_iterations(&self) -> usize {
        self.iterations + self.phases.iter().map(|p| p.iterations).sum::<usize>()
    }
}

pub(crate) fn window(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}
