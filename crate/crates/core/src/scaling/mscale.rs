use std::sync::Arc;

use super::richardson::{richardson, ResidualNorm, RichardsonConfig};
use super::{MSolveOperators, ScalingPair};
use crate::error::{Error, Result};
use crate::rcdd::{BackendChoice, CallReport, LinearOperator, NormTag, RcddEngine};
use crate::report::{window, PhaseReport, SolveReport, SolveStatus};
use crate::sparse::{norm2, norm_inf, vector_condition, DenseVector, SparseMatrix, DEFAULT_RCDD_SLACK};

/// Inner-loop cap `ceil(8·ln(n·max(K,2)/min(eps,1)))`.
pub fn inner_iteration_cap(n: usize, k: f64, eps: f64) -> usize {
    let arg = n.max(1) as f64 * k.max(2.0) / eps.min(1.0);
    (8.0 * arg.ln()).ceil().max(1.0) as usize
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")))
    }
}

fn scale_by(d: &[f64], x: &[f64]) -> Vec<f64> {
    d.iter().zip(x).map(|(a, b)| a * b).collect()
}

/// Operators `P_r(x) = R Z(L x)` and `P_l(x) = L Zᵀ(R x)` for `S = L M R`
/// already formed.
fn operators_from_scaled(
    s: &SparseMatrix,
    left: &[f64],
    right: &[f64],
    delta: f64,
    backend: BackendChoice,
) -> Result<MSolveOperators> {
    let engine = Arc::new(RcddEngine::new(s, backend)?);
    let n = left.len();
    let eps_right = delta / vector_condition(left);
    let eps_left = delta / vector_condition(right);
    let (l1, r1, e1) = (left.to_vec(), right.to_vec(), engine.clone());
    let p_right = LinearOperator::new(n, delta, NormTag::L2, backend.seed, move |x| {
        let (z, report) = e1.solve(&scale_by(&l1, x), eps_right, false)?;
        Ok((scale_by(&r1, &z), report))
    });
    let (l2, r2, e2) = (left.to_vec(), right.to_vec(), engine);
    let p_left = LinearOperator::new(n, delta, NormTag::L2, backend.seed, move |x| {
        let (z, report) = e2.solve(&scale_by(&r2, x), eps_left, true)?;
        Ok((scale_by(&l2, &z), report))
    });
    Ok(MSolveOperators { p_right, p_left, delta })
}

/// Builds approximate inverses of `M` and `Mᵀ` from a scaling that makes
/// `L M R` RCDD. The inner RCDD solves run at `delta/κ(L)` and `delta/κ(R)`,
/// so each operator satisfies `‖b − M P(b)‖₂ ≤ delta·‖b‖₂`.
pub fn solve_from_scale(m: &SparseMatrix, scale: &ScalingPair, delta: f64) -> Result<MSolveOperators> {
    solve_from_scale_with(m, scale, delta, BackendChoice::default())
}

pub fn solve_from_scale_with(
    m: &SparseMatrix,
    scale: &ScalingPair,
    delta: f64,
    backend: BackendChoice,
) -> Result<MSolveOperators> {
    check_delta(delta)?;
    let s = m.apply_scaling(&scale.left, &scale.right)?;
    operators_from_scaled(&s, &scale.left, &scale.right, delta, backend)
}

/// Upper bound on `κ₂(S)` from `‖S‖₂ ≤ √(‖S‖₁‖S‖∞)` and the Varah bound
/// `‖S⁻¹‖₂ ≤ 1/√(β_row β_col)` for strictly RCDD `S`.
pub(crate) fn rcdd_condition_bound(s: &SparseMatrix) -> f64 {
    let norms = s.induced_norms();
    let (rows, cols) = s.dominance_margins();
    let beta_row = rows.iter().cloned().fold(f64::INFINITY, f64::min);
    let beta_col = cols.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(beta_row > 0.0 && beta_col > 0.0) {
        return f64::INFINITY;
    }
    (norms.norm_1 * norms.norm_inf).sqrt() / (beta_row * beta_col).sqrt()
}

/// One inner loop of the scaling procedure on the normalized matrix `a`.
pub(crate) struct PhaseSpec<'a> {
    pub a: &'a SparseMatrix,
    /// Target shift: the loop drives `M_alpha r` and `M_alphaᵀ ℓ` towards `𝟙`.
    pub alpha: f64,
    /// Shift at which `(left, right)` is certified; the preconditioner inverts `M_precond_alpha`.
    pub precond_alpha: f64,
    pub left: &'a [f64],
    pub right: &'a [f64],
    pub delta: f64,
    pub cap: usize,
    pub backend: BackendChoice,
    /// Demand the open window `(½, 3/2)` instead of the closed one.
    pub strict: bool,
    /// Largest admissible condition bound of the scaled preconditioner matrix.
    pub budget: Option<f64>,
}

#[derive(Debug)]
pub(crate) enum PhaseFailure {
    CapHit { iterations: usize },
    Budget { bound: f64 },
    Solver(Error),
}

pub(crate) struct PhaseOutcome {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub report: PhaseReport,
}

pub(crate) fn run_phase(spec: &PhaseSpec<'_>) -> std::result::Result<PhaseOutcome, PhaseFailure> {
    let a = spec.a;
    let n = a.n_rows();
    let m_prev = a
        .identity_combination(1.0 + spec.precond_alpha, -1.0)
        .map_err(PhaseFailure::Solver)?;
    let s = m_prev.apply_scaling(spec.left, spec.right).map_err(PhaseFailure::Solver)?;
    if let Some(limit) = spec.budget {
        let bound = rcdd_condition_bound(&s);
        if !(bound <= limit) {
            return Err(PhaseFailure::Budget { bound });
        }
    }
    let ops = operators_from_scaled(&s, spec.left, spec.right, spec.delta, spec.backend).map_err(PhaseFailure::Solver)?;

    let c = 1.0 + spec.alpha;
    let mut r = vec![0.0; n];
    let mut l = vec![0.0; n];
    let mut residuals = Vec::new();
    let mut k = 0;
    loop {
        let mut rr = a.shifted_mul(c, &r, false);
        let mut rl = a.shifted_mul(c, &l, true);
        let right_window = window(&rr);
        let left_window = window(&rl);
        rr.iter_mut().for_each(|v| *v -= 1.0);
        rl.iter_mut().for_each(|v| *v -= 1.0);
        let (nr, nl) = (norm_inf(&rr), norm_inf(&rl));
        residuals.push(nr.max(nl));
        let inside = if spec.strict {
            nr < 0.5 && nl < 0.5
        } else {
            nr <= 0.5 && nl <= 0.5
        };
        if inside {
            return Ok(PhaseOutcome {
                left: l,
                right: r,
                report: PhaseReport {
                    alpha: spec.alpha,
                    iterations: k,
                    cap: spec.cap,
                    right_window,
                    left_window,
                    residuals,
                },
            });
        }
        if k >= spec.cap || !(nr.is_finite() && nl.is_finite()) {
            return Err(PhaseFailure::CapHit { iterations: k });
        }
        let dr = ops.p_right.apply_slice(&rr).map_err(PhaseFailure::Solver)?;
        let dl = ops.p_left.apply_slice(&rl).map_err(PhaseFailure::Solver)?;
        r.iter_mut().zip(dr).for_each(|(x, d)| *x -= d);
        l.iter_mut().zip(dl).for_each(|(x, d)| *x -= d);
        k += 1;
    }
}

fn validate_scale_inputs(a: &SparseMatrix, s: f64, eps: f64, k: f64) -> Result<usize> {
    let n = a.require_square()?;
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    a.require_nonnegative()?;
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("s must be positive, got {s}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("K must be positive, got {k}")));
    }
    Ok(n)
}

/// Scaling pair for `(1+eps)·s·I − A`.
///
/// Starts at `α = 2·max(‖A/s‖₁, ‖A/s‖∞)` with `ℓ = r = 𝟙/α` and halves `α`
/// while `α > eps`. Each phase builds solvers for `M_{2α}` from the previous
/// pair and runs Richardson from zero until `‖M_α r − 𝟙‖∞ ≤ ½` and
/// `‖M_αᵀ ℓ − 𝟙‖∞ ≤ ½`. `K` should bound `s‖M⁻¹‖∞` and `s‖M⁻¹‖₁`; an
/// undersized `K` or `ρ(A) ≥ s` shows up as [`Error::IterationCapHit`].
///
/// The returned vectors are divided by `s`, so `M_α r` keeps its window for
/// the unnormalized `M_α = (1+α)sI − A`.
pub fn mmatrix_scale(a: &SparseMatrix, s: f64, eps: f64, k: f64) -> Result<(ScalingPair, SolveReport)> {
    mmatrix_scale_with(a, s, eps, k, BackendChoice::default())
}

pub fn mmatrix_scale_with(
    a: &SparseMatrix,
    s: f64,
    eps: f64,
    k: f64,
    backend: BackendChoice,
) -> Result<(ScalingPair, SolveReport)> {
    let n = validate_scale_inputs(a, s, eps, k)?;
    let an = a.scaled(1.0 / s);
    let finish = |l: Vec<f64>, r: Vec<f64>, alpha: f64, report: SolveReport| -> Result<(ScalingPair, SolveReport)> {
        let left = DenseVector::new(l.iter().map(|v| v / s).collect())?;
        let right = DenseVector::new(r.iter().map(|v| v / s).collect())?;
        Ok((ScalingPair { left, right, alpha, s }, report))
    };

    if n == 1 {
        let d = 1.0 + eps - an.get(0, 0);
        if !(d > 0.0) {
            return Err(Error::IterationCapHit { phase: 0 });
        }
        return finish(vec![1.0 / d], vec![1.0 / d], eps, SolveReport::converged());
    }

    let norm = an.induced_norms().max();
    if norm == 0.0 {
        let v = vec![1.0 / (1.0 + eps); n];
        return finish(v.clone(), v, eps, SolveReport::converged());
    }

    let cap = inner_iteration_cap(n, k, eps);
    let delta = 1.0 / (8.0 * k.max(1.0));
    let mut alpha = 2.0 * norm;
    let mut l = vec![1.0 / alpha; n];
    let mut r = vec![1.0 / alpha; n];
    let mut phases = Vec::new();
    while alpha > eps {
        let prev = alpha;
        alpha /= 2.0;
        let phase = phases.len() + 1;
        let spec = PhaseSpec {
            a: &an,
            alpha,
            precond_alpha: prev,
            left: &l,
            right: &r,
            delta,
            cap,
            backend,
            strict: false,
            budget: None,
        };
        match run_phase(&spec) {
            Ok(out) => {
                l = out.left;
                r = out.right;
                phases.push(out.report);
            }
            Err(PhaseFailure::CapHit { .. }) | Err(PhaseFailure::Budget { .. }) => {
                return Err(Error::IterationCapHit { phase });
            }
            Err(PhaseFailure::Solver(e)) => return Err(e),
        }
    }

    let phase = phases.len();
    let shifted = an.identity_combination(1.0 + eps, -1.0)?;
    let certified = shifted
        .apply_scaling(&l, &r)
        .map(|sc| sc.check_rcdd(DEFAULT_RCDD_SLACK))
        .unwrap_or(false);
    if !certified {
        return Err(Error::ScalingRejected { phase });
    }
    let report = SolveReport {
        status: SolveStatus::Converged,
        iterations: 0,
        residuals: Vec::new(),
        phases,
    };
    finish(l, r, alpha, report)
}

/// Approximate inverse of `M = sI − A` with `‖b − M P(b)‖₂ ≤ eps·‖b‖₂`.
///
/// Scales `(1+ε′)sI − A` with `ε′ = min(eps/3, 1/(4K))`, uses the resulting
/// RCDD solve as a preconditioner and refines against the true `M` with
/// Richardson. The `1/(4K)` cap keeps `‖ε′s M′⁻¹‖ ≤ ¼`, so the refinement
/// contracts whenever `K` is valid.
pub fn solve_m(a: &SparseMatrix, s: f64, eps: f64, k: f64) -> Result<LinearOperator> {
    solve_m_with(a, s, eps, k, BackendChoice::default())
}

pub fn solve_m_with(a: &SparseMatrix, s: f64, eps: f64, k: f64, backend: BackendChoice) -> Result<LinearOperator> {
    check_delta(eps)?;
    let n = validate_scale_inputs(a, s, eps, k)?;
    let eps_inner = (eps / 3.0).min(0.25 / k.max(1.0));
    let (scale, _) = mmatrix_scale_with(a, s, eps_inner, k, backend)?;
    let m_shift = a.identity_combination((1.0 + eps_inner) * s, -1.0)?;
    let pre = solve_from_scale_with(&m_shift, &scale, 0.125, backend)?.p_right;

    let m = a.clone();
    let cfg = RichardsonConfig {
        tolerance: eps,
        max_iterations: (2.0 * (1.0 / eps).log2()).ceil() as usize + 10,
        residual_norm: ResidualNorm::L2,
    };
    Ok(LinearOperator::new(n, eps, NormTag::L2, backend.seed, move |b| {
        if norm2(b) == 0.0 {
            return Ok((
                vec![0.0; b.len()],
                CallReport {
                    iterations: 0,
                    residual: 0.0,
                },
            ));
        }
        let apply_m = |x: &[f64]| m.shifted_mul(s, x, false);
        let (x, report) = richardson(&apply_m, |r| pre.apply_slice(r), b, &vec![0.0; b.len()], &cfg)?;
        let residual = report.residuals.last().copied().unwrap_or(0.0) / norm2(b);
        if !report.is_converged() {
            return Err(Error::BackendDiverged {
                iterations: report.iterations,
                residual,
            });
        }
        Ok((
            x,
            CallReport {
                iterations: report.iterations,
                residual,
            },
        ))
    }))
}
