//! M-matrix decisions and certified Perron pairs.
//!
//! [`m_decide`] answers whether `I − A` is a nonsingular M-matrix (for
//! irreducible `A ≥ 0`, whether `ρ(A) < 1`), either with a scaling that makes
//! `L(I − A)R` RCDD or with a concrete failure witness. [`find_perron_value`]
//! bisects on that decision and [`compute_perron`] wraps the search in a
//! doubling loop over the eigenvector-conditioning guess `K`, accepting only
//! answers backed by Collatz–Wielandt bounds.

use std::fmt;

use crate::error::{Error, Result};
use crate::rcdd::BackendChoice;
use crate::report::{SolveReport, SolveStatus};
use crate::scaling::{mmatrix_scale_with, run_phase, solve_from_scale_with, PhaseFailure, PhaseSpec, ScalingPair};
use crate::scaling::{richardson, ResidualNorm, RichardsonConfig};
use crate::sparse::{norm_inf, DenseVector, SparseMatrix, DEFAULT_RCDD_SLACK};

/// Two-sided answer of [`m_decide`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// `I − A` is a nonsingular M-matrix; a fortiori so is `(1+ε)I − A`.
    IsMMatrixShifted,
    /// `I − A` is not a nonsingular M-matrix (given a valid `γ`).
    NotMMatrix,
}

/// Which check refuted the M-matrix hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// A halving phase exhausted its inner iteration cap.
    CapHit { phase: usize, iterations: usize },
    /// A computed scaling vector had a nonpositive entry, so `M_α` is not monotone.
    NonpositiveScaling { phase: usize, index: usize },
    /// The final pass on `I − A` itself never entered the window `(½, 3/2)`.
    WindowViolation { phase: usize },
    /// The scaled preconditioner matrix was worse conditioned than `18γ²` allows.
    SolverBudget { phase: usize, bound: f64, limit: f64 },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::CapHit { phase, iterations } => {
                write!(f, "cap-hit: phase {phase} stopped after {iterations} iterations")
            }
            Witness::NonpositiveScaling { phase, index } => {
                write!(f, "nonpositive scaling: entry {index} in phase {phase}")
            }
            Witness::WindowViolation { phase } => write!(f, "window violation in phase {phase}"),
            Witness::SolverBudget { phase, bound, limit } => {
                write!(f, "solver budget: condition bound {bound:e} exceeds {limit:e} in phase {phase}")
            }
        }
    }
}

impl Witness {
    pub fn kind(&self) -> &'static str {
        match self {
            Witness::CapHit { .. } => "cap-hit",
            Witness::NonpositiveScaling { .. } => "nonpositive-scaling",
            Witness::WindowViolation { .. } => "window-violation",
            Witness::SolverBudget { .. } => "solver-budget",
        }
    }
}

/// Result of [`m_decide`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionOutcome {
    pub verdict: Verdict,
    /// Present for [`Verdict::IsMMatrixShifted`]; certified at `alpha = 0`.
    pub scaling: Option<ScalingPair>,
    /// Present for [`Verdict::NotMMatrix`].
    pub witness: Option<Witness>,
    pub report: SolveReport,
}

impl DecisionOutcome {
    pub fn is_m_matrix(&self) -> bool {
        self.verdict == Verdict::IsMMatrixShifted
    }

    fn no(witness: Witness, phases: Vec<crate::report::PhaseReport>) -> Self {
        let phase = match &witness {
            Witness::CapHit { phase, .. }
            | Witness::NonpositiveScaling { phase, .. }
            | Witness::WindowViolation { phase }
            | Witness::SolverBudget { phase, .. } => *phase,
        };
        Self {
            verdict: Verdict::NotMMatrix,
            scaling: None,
            witness: Some(witness),
            report: SolveReport {
                status: SolveStatus::IterationCapHit { phase },
                iterations: 0,
                residuals: Vec::new(),
                phases,
            },
        }
    }
}

/// Loop cap `ceil(8·ln(64·n·γ²))` used by [`m_decide`].
pub fn decision_cap(n: usize, gamma: f64) -> usize {
    (8.0 * (64.0 * n as f64 * gamma * gamma).ln()).ceil().max(1.0) as usize
}

/// Decides whether `I − A` is a nonsingular M-matrix.
///
/// Runs the halving-shift scaling loop down to `α ≤ eps`, then one more pass
/// at `α = 0` so the verdict concerns `I − A` itself. `gamma` should bound
/// `‖(I − A)⁻¹‖∞` and `‖(I − A)⁻¹‖₁` when the answer is yes; it sets the
/// loop cap and the conditioning budget `18γ²` of every scaled solve. Callers
/// asking about `sI − A` pass `A/s`.
pub fn m_decide(a: &SparseMatrix, eps: f64, gamma: f64) -> Result<DecisionOutcome> {
    m_decide_with(a, eps, gamma, BackendChoice::default())
}

pub fn m_decide_with(a: &SparseMatrix, eps: f64, gamma: f64, backend: BackendChoice) -> Result<DecisionOutcome> {
    let n = a.require_square()?;
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    a.require_nonnegative()?;
    if !(eps > 0.0 && eps.is_finite()) || !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument("eps and gamma must be positive".into()));
    }
    if !a.is_irreducible() {
        return Err(Error::NotIrreducible);
    }

    if n == 1 {
        let d = 1.0 - a.get(0, 0);
        if d > 0.0 {
            let v = DenseVector::new(vec![1.0 / d])?;
            return Ok(DecisionOutcome {
                verdict: Verdict::IsMMatrixShifted,
                scaling: Some(ScalingPair {
                    left: v.clone(),
                    right: v,
                    alpha: 0.0,
                    s: 1.0,
                }),
                witness: None,
                report: SolveReport::converged(),
            });
        }
        return Ok(DecisionOutcome::no(Witness::NonpositiveScaling { phase: 0, index: 0 }, Vec::new()));
    }

    let cap = decision_cap(n, gamma);
    let delta = 1.0 / (8.0 * gamma.max(1.0));
    let limit = 18.0 * gamma * gamma * (1.0 + 1e-9);
    let mut alpha = 2.0 * a.induced_norms().max();
    let mut l = vec![1.0 / alpha; n];
    let mut r = vec![1.0 / alpha; n];
    let mut phases = Vec::new();
    let mut finished = false;
    while !finished {
        let prev = alpha;
        // one extra pass at α = 0 once the shift is below eps
        let last = alpha <= eps;
        alpha = if last { 0.0 } else { alpha / 2.0 };
        finished = last;
        let phase = phases.len() + 1;
        let spec = PhaseSpec {
            a,
            alpha,
            precond_alpha: prev,
            left: &l,
            right: &r,
            delta,
            cap,
            backend,
            strict: true,
            budget: Some(limit),
        };
        match run_phase(&spec) {
            Ok(out) => {
                let bad = out
                    .right
                    .iter()
                    .chain(out.left.iter())
                    .position(|&v| !(v > 0.0));
                if let Some(idx) = bad {
                    phases.push(out.report);
                    let index = if idx >= n { idx - n } else { idx };
                    return Ok(DecisionOutcome::no(Witness::NonpositiveScaling { phase, index }, phases));
                }
                l = out.left;
                r = out.right;
                phases.push(out.report);
            }
            Err(PhaseFailure::CapHit { iterations }) => {
                let witness = if last {
                    Witness::WindowViolation { phase }
                } else {
                    Witness::CapHit { phase, iterations }
                };
                return Ok(DecisionOutcome::no(witness, phases));
            }
            Err(PhaseFailure::Budget { bound }) => {
                return Ok(DecisionOutcome::no(Witness::SolverBudget { phase, bound, limit }, phases));
            }
            Err(PhaseFailure::Solver(Error::NotRcdd))
            | Err(PhaseFailure::Solver(Error::Singular))
            | Err(PhaseFailure::Solver(Error::BackendDiverged { .. })) => {
                return Ok(DecisionOutcome::no(
                    Witness::SolverBudget {
                        phase,
                        bound: f64::INFINITY,
                        limit,
                    },
                    phases,
                ));
            }
            Err(PhaseFailure::Solver(e)) => return Err(e),
        }
    }

    let phase = phases.len();
    let m = a.identity_combination(1.0, -1.0)?;
    let certified = m
        .apply_scaling(&l, &r)
        .map(|s| s.check_rcdd(DEFAULT_RCDD_SLACK))
        .unwrap_or(false);
    if !certified {
        return Ok(DecisionOutcome::no(Witness::WindowViolation { phase }, phases));
    }
    Ok(DecisionOutcome {
        verdict: Verdict::IsMMatrixShifted,
        scaling: Some(ScalingPair {
            left: DenseVector::new(l)?,
            right: DenseVector::new(r)?,
            alpha: 0.0,
            s: 1.0,
        }),
        witness: None,
        report: SolveReport {
            status: SolveStatus::Converged,
            iterations: 0,
            residuals: Vec::new(),
            phases,
        },
    })
}

/// Final bracket of [`find_perron_value`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerronBracket {
    /// Largest certified strict lower bound on `ρ(A)`.
    pub lower: f64,
    /// Upper end; the value the search returns.
    pub upper: f64,
    pub steps: usize,
}

/// Bisection cap for [`find_perron_value`]; the bracket shrinks by ¾ per step.
const MAX_BISECTION_STEPS: usize = 4000;

/// Bisects for `s` with `ρ(A) ≤ s < (1+eps)ρ(A)`, given `ρ(A) ∈ (s1, s2]`.
///
/// Each step decides `I − A/(s_m(1+δ/2))` with `δ = ½(s2−s1)/(s2+s1)` and
/// precision `δ/3`. A refutation moves `s1` to `s_m`; a certificate proves
/// `ρ(A) < s_m(1+δ/2)` and moves `s2` there. Stops when `(1+eps/2)s1 ≥ s2`.
pub fn find_perron_value(a: &SparseMatrix, s1: f64, s2: f64, eps: f64, k: f64) -> Result<(f64, SolveReport)> {
    let (bracket, report) = find_perron_bracket(a, s1, s2, eps, k, BackendChoice::default())?;
    Ok((bracket.upper, report))
}

pub fn find_perron_bracket(
    a: &SparseMatrix,
    s1: f64,
    s2: f64,
    eps: f64,
    k: f64,
    backend: BackendChoice,
) -> Result<(PerronBracket, SolveReport)> {
    a.require_square()?;
    if !a.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(s1 >= 0.0 && s2 > s1 && s2.is_finite()) {
        return Err(Error::InvalidArgument(format!("need 0 ≤ s1 < s2, got ({s1}, {s2})")));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("K must be positive, got {k}")));
    }
    let (mut lo, mut hi) = (s1, s2);
    let mut steps = 0;
    let mut total = 0;
    while (1.0 + eps / 2.0) * lo < hi {
        if steps == MAX_BISECTION_STEPS {
            return Err(Error::NoConvergence { iterations: steps });
        }
        let sm = 0.5 * (lo + hi);
        let delta = 0.5 * (hi - lo) / (hi + lo);
        let shift = sm * (1.0 + delta / 2.0);
        let outcome = m_decide_with(&a.scaled(1.0 / shift), delta / 3.0, 2.0 * k / delta, backend)?;
        total += outcome.report.total_iterations();
        if outcome.is_m_matrix() {
            hi = hi.min(shift);
        } else {
            lo = sm;
        }
        steps += 1;
    }
    let report = SolveReport {
        status: SolveStatus::Converged,
        iterations: total,
        residuals: Vec::new(),
        phases: Vec::new(),
    };
    Ok((
        PerronBracket {
            lower: lo,
            upper: hi,
            steps,
        },
        report,
    ))
}

/// Approximate Perron pair with its certification data.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronCertificate {
    /// Eigenvalue estimate.
    pub s: f64,
    /// Approximate left Perron vector, scaled to `‖·‖∞ = 1`.
    pub left: DenseVector,
    /// Approximate right Perron vector, scaled to `‖·‖∞ = 1`.
    pub right: DenseVector,
    pub k_final: f64,
    /// `‖(I − Aᵀ/s)ℓ‖∞ / ‖ℓ‖∞`.
    pub residual_left: f64,
    /// `‖(I − A/s)r‖∞ / ‖r‖∞`.
    pub residual_right: f64,
    /// Collatz–Wielandt bounds of `ρ(A)` from `right`.
    pub cw_lower: f64,
    pub cw_upper: f64,
}

/// `‖(I − A/s)x‖∞ / ‖x‖∞`, or with `Aᵀ`.
pub fn relative_residual(a: &SparseMatrix, s: f64, x: &[f64], transpose: bool) -> f64 {
    let ax = if transpose { a.mul_t(x) } else { a.mul(x) };
    let res: Vec<f64> = x.iter().zip(ax).map(|(xi, yi)| xi - yi / s).collect();
    norm_inf(&res) / norm_inf(x)
}

/// Collatz–Wielandt bounds `(min_i (Ax)_i/x_i, max_i (Ax)_i/x_i)` for `x > 0`.
pub fn collatz_wielandt_bounds(a: &SparseMatrix, x: &DenseVector) -> Result<(f64, f64)> {
    let n = a.require_square()?;
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    if let Some(index) = x.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NonpositiveScaling { index });
    }
    Ok(cw_bounds(&a.mul(x), x))
}

fn cw_bounds(ax: &[f64], x: &[f64]) -> (f64, f64) {
    if x.iter().any(|&v| !(v > 0.0)) {
        return (0.0, f64::INFINITY);
    }
    ax.iter()
        .zip(x)
        .map(|(p, q)| p / q)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn normalized(x: &[f64]) -> Vec<f64> {
    let m = norm_inf(x);
    x.iter().map(|v| v / m).collect()
}

/// Richardson polish of `M r = 𝟙` for a certified pair, with ℓ∞ tolerance.
fn polish(m: &SparseMatrix, scale: &ScalingPair, backend: BackendChoice, start: Vec<f64>, transpose: bool) -> Vec<f64> {
    let ops = match solve_from_scale_with(m, scale, 0.125, backend) {
        Ok(ops) => ops,
        Err(_) => return start,
    };
    let p = if transpose { ops.p_left } else { ops.p_right };
    let apply = |x: &[f64]| if transpose { m.mul_t(x) } else { m.mul(x) };
    let ones = vec![1.0; start.len()];
    let cfg = RichardsonConfig {
        tolerance: 1e-12,
        max_iterations: 60,
        residual_norm: ResidualNorm::LInf,
    };
    match richardson(&apply, |r| p.apply_slice(r), &ones, &start, &cfg) {
        Ok((x, _)) if x.iter().all(|&v| v > 0.0) => x,
        _ => start,
    }
}

struct SimpleRun {
    certificate: PerronCertificate,
    bracket: PerronBracket,
}

fn simple_perron_run(a: &SparseMatrix, eps: f64, k: f64, backend: BackendChoice) -> Result<SimpleRun> {
    let n = a.require_square()?;
    a.require_nonnegative()?;
    if !a.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    let s2 = a.induced_norms().norm_inf;
    if n == 1 {
        let v = DenseVector::ones(1);
        return Ok(SimpleRun {
            certificate: PerronCertificate {
                s: s2,
                left: v.clone(),
                right: v,
                k_final: k,
                residual_left: 0.0,
                residual_right: 0.0,
                cw_lower: s2,
                cw_upper: s2,
            },
            bracket: PerronBracket {
                lower: s2,
                upper: s2,
                steps: 0,
            },
        });
    }
    let (bracket, _) = find_perron_bracket(a, 0.0, s2, eps, k, backend)?;
    let s = bracket.upper;
    let shift = (1.0 + eps / 2.0) * s;
    let scaled = a.scaled(1.0 / shift);
    let eps3 = eps / 3.0;
    let (pair, _) = mmatrix_scale_with(&scaled, 1.0, eps3, 2.0 * k / eps, backend)?;
    let m = scaled.identity_combination(1.0 + eps3, -1.0)?;
    let right = polish(&m, &pair, backend, pair.right.to_vec(), false);
    let left = polish(&m, &pair, backend, pair.left.to_vec(), true);
    let right = normalized(&right);
    let left = normalized(&left);
    let (cw_lower, cw_upper) = cw_bounds(&a.mul(&right), &right);
    Ok(SimpleRun {
        certificate: PerronCertificate {
            s,
            residual_left: relative_residual(a, s, &left, true),
            residual_right: relative_residual(a, s, &right, false),
            left: DenseVector::new(left)?,
            right: DenseVector::new(right)?,
            k_final: k,
            cw_lower,
            cw_upper,
        },
        bracket,
    })
}

/// Eigenvalue upper estimate `s ∈ [ρ(A), (1+eps)ρ(A))` and approximate
/// Perron vectors from the scaling of `(1+eps/3)I − A/((1+eps/2)s)`.
pub fn simple_perron(a: &SparseMatrix, eps: f64, k: f64) -> Result<PerronCertificate> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1/4), got {eps}")));
    }
    Ok(simple_perron_run(a, eps, k, BackendChoice::default())?.certificate)
}

/// Largest `K` tried by [`compute_perron`].
pub const K_CAP: f64 = (1u64 << 40) as f64;

/// Certified Perron value and vectors without prior knowledge of `K`.
///
/// Starting from `K = 1`, runs the simple search at precision `delta/(8K²)`
/// and accepts once both vectors are `delta/(2K²)`-approximate eigenvectors
/// for the returned `s` and the Collatz–Wielandt lower bound of the right
/// vector reaches `(1 − delta)s`; otherwise doubles `K`.
///
/// The returned `s` is the lower end of the final search bracket, strictly
/// below `ρ(A)` whenever the decisions at that `K` were exact, and the
/// Collatz–Wielandt test then gives `(1 − delta)ρ(A) ≤ s`.
pub fn compute_perron(a: &SparseMatrix, delta: f64) -> Result<PerronCertificate> {
    compute_perron_with(a, delta, BackendChoice::default())
}

pub fn compute_perron_with(a: &SparseMatrix, delta: f64, backend: BackendChoice) -> Result<PerronCertificate> {
    let n = a.require_square()?;
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    a.require_nonnegative()?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !a.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    if n == 1 {
        return simple_perron_run(a, 0.1, 1.0, backend).map(|r| r.certificate);
    }
    let mut k: f64 = 1.0;
    while k <= K_CAP {
        let eps = delta / (8.0 * k * k);
        if eps < 1e-15 {
            break;
        }
        match simple_perron_run(a, eps, k, backend) {
            Ok(run) => {
                let cert = run.certificate;
                let right = cert.right.as_slice();
                let left = cert.left.as_slice();
                let (cw_lower, cw_upper) = cw_bounds(&a.mul(right), right);
                let s = run.bracket.lower;
                let threshold = delta / (2.0 * k * k);
                let res_r = relative_residual(a, s, right, false);
                let res_l = relative_residual(a, s, left, true);
                // only the right vector may certify, so that the reported
                // Collatz–Wielandt sandwich always backs `s`
                let certified = cw_lower >= (1.0 - delta) * s;
                if s > 0.0 && certified && res_r <= threshold && res_l <= threshold {
                    return Ok(PerronCertificate {
                        s,
                        residual_left: res_l,
                        residual_right: res_r,
                        k_final: k,
                        cw_lower,
                        cw_upper,
                        ..cert
                    });
                }
            }
            Err(Error::IterationCapHit { .. })
            | Err(Error::ScalingRejected { .. })
            | Err(Error::NoConvergence { .. })
            | Err(Error::BackendDiverged { .. })
            | Err(Error::NotRcdd) => {}
            Err(e) => return Err(e),
        }
        k *= 2.0;
    }
    Err(Error::KCapExceeded)
}
