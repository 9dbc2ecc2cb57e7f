//! Solvers for RCDD and SDD systems behind a common operator type.
//!
//! [`build_rcdd_solver`] returns `Z` with `‖x − S Z(x)‖₂ ≤ ε‖x‖₂` for every
//! input, and [`build_sdd_solver`] returns `Z` with
//! `‖S⁻¹x − Z(x)‖_S ≤ ε‖S⁻¹x‖_S`. Every call checks its own contract, so
//! the bounds hold per call rather than in expectation.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lu::SparseLu;
use crate::sparse::{dot, norm2, DenseVector, SparseMatrix, DEFAULT_RCDD_SLACK};

/// Which solver sits behind an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    /// Sparse LU with threshold partial pivoting plus iterative refinement.
    DirectLu,
    /// Damped Jacobi-preconditioned Richardson iteration.
    RichardsonJacobi,
    /// Conjugate gradient; on the normal equations `SᵀS` for nonsymmetric `S`.
    ConjugateGradient,
}

/// Backend selection and budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackendChoice {
    pub kind: BackendKind,
    pub max_iterations: usize,
    /// Iterative backends aim for `inner_tolerance · ε` to leave headroom.
    pub inner_tolerance: f64,
    pub seed: u64,
}

impl Default for BackendChoice {
    fn default() -> Self {
        Self {
            kind: BackendKind::DirectLu,
            max_iterations: 10_000,
            inner_tolerance: 0.5,
            seed: 0,
        }
    }
}

impl BackendChoice {
    pub fn new(kind: BackendKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if !(self.inner_tolerance > 0.0 && self.inner_tolerance < 1.0) {
            return Err(Error::InvalidArgument("inner_tolerance must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Norm in which an operator's error contract holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormTag {
    L2,
    Energy,
}

/// What a single application achieved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CallReport {
    pub iterations: usize,
    /// Relative error achieved in the operator's norm (an estimate for CG on SDD input without a Gershgorin bound).
    pub residual: f64,
}

type ApplyFn = dyn Fn(&[f64]) -> Result<(Vec<f64>, CallReport)> + Send + Sync;

/// Deterministic black-box map `x ↦ P(x)` with a declared error bound.
#[derive(Clone)]
pub struct LinearOperator {
    dim: usize,
    error_bound: f64,
    norm_tag: NormTag,
    seed: u64,
    map: Arc<ApplyFn>,
}

impl fmt::Debug for LinearOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearOperator")
            .field("dim", &self.dim)
            .field("error_bound", &self.error_bound)
            .field("norm_tag", &self.norm_tag)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

impl LinearOperator {
    pub fn new<F>(dim: usize, error_bound: f64, norm_tag: NormTag, seed: u64, map: F) -> Self
    where
        F: Fn(&[f64]) -> Result<(Vec<f64>, CallReport)> + Send + Sync + 'static,
    {
        Self {
            dim,
            error_bound,
            norm_tag,
            seed,
            map: Arc::new(map),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, 0.0, NormTag::L2, 0, |x| {
            Ok((
                x.to_vec(),
                CallReport {
                    iterations: 0,
                    residual: 0.0,
                },
            ))
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn error_bound(&self) -> f64 {
        self.error_bound
    }

    pub fn norm_tag(&self) -> NormTag {
        self.norm_tag
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn apply(&self, x: &DenseVector) -> Result<DenseVector> {
        Ok(self.apply_with_report(x)?.0)
    }

    pub fn apply_with_report(&self, x: &DenseVector) -> Result<(DenseVector, CallReport)> {
        let (y, report) = self.call(x)?;
        Ok((DenseVector::new(y)?, report))
    }

    pub(crate) fn call(&self, x: &[f64]) -> Result<(Vec<f64>, CallReport)> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        (self.map)(x)
    }

    pub(crate) fn apply_slice(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.call(x)?.0)
    }
}

fn validate_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")))
    }
}

fn zero_report() -> CallReport {
    CallReport {
        iterations: 0,
        residual: 0.0,
    }
}

fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

/// Shared solver state for an RCDD matrix, usable for `S` and `Sᵀ`.
#[derive(Debug)]
pub(crate) struct RcddEngine {
    s: SparseMatrix,
    backend: BackendChoice,
    lu: Option<SparseLu>,
    diag: Vec<f64>,
    norm: f64,
}

/// Residuals below `BACKWARD_FLOOR·(‖S‖·‖z‖₂ + ‖x‖₂)` are rounding noise of
/// a backward-stable solve; the direct backend accepts them even when `eps`
/// asks for less.
const BACKWARD_FLOOR: f64 = 64.0 * f64::EPSILON;

impl RcddEngine {
    pub(crate) fn new(s: &SparseMatrix, backend: BackendChoice) -> Result<Self> {
        backend.validate()?;
        s.require_square()?;
        if !s.check_rcdd(DEFAULT_RCDD_SLACK) {
            return Err(Error::NotRcdd);
        }
        let lu = match backend.kind {
            BackendKind::DirectLu => Some(SparseLu::factor(s)?),
            _ => None,
        };
        Ok(Self {
            s: s.clone(),
            backend,
            lu,
            diag: s.diag(),
            norm: s.induced_norms().max(),
        })
    }

    fn mul(&self, x: &[f64], transpose: bool) -> Vec<f64> {
        if transpose {
            self.s.mul_t(x)
        } else {
            self.s.mul(x)
        }
    }

    /// Solves `S z = x` (or `Sᵀ z = x`) to relative ℓ2 residual `eps`.
    pub(crate) fn solve(&self, x: &[f64], eps: f64, transpose: bool) -> Result<(Vec<f64>, CallReport)> {
        let xnorm = norm2(x);
        if xnorm == 0.0 {
            return Ok((vec![0.0; x.len()], zero_report()));
        }
        let target = eps * xnorm;
        match self.backend.kind {
            BackendKind::DirectLu => {
                let lu = self.lu.as_ref().expect("direct backend keeps its factors");
                let lu_solve = |b: &[f64]| if transpose { lu.solve_transpose(b) } else { lu.solve(b) };
                let mut z = lu_solve(x);
                let mut steps = 0;
                loop {
                    let r = sub(x, &self.mul(&z, transpose));
                    let rn = norm2(&r);
                    let floor = BACKWARD_FLOOR * (self.norm * norm2(&z) + xnorm);
                    if rn <= target.max(floor) {
                        return Ok((
                            z,
                            CallReport {
                                iterations: steps,
                                residual: rn / xnorm,
                            },
                        ));
                    }
                    if steps == 3 || !rn.is_finite() {
                        return Err(Error::BackendDiverged {
                            iterations: steps,
                            residual: rn / xnorm,
                        });
                    }
                    let dz = lu_solve(&r);
                    z.iter_mut().zip(dz).for_each(|(a, b)| *a += b);
                    steps += 1;
                }
            }
            BackendKind::RichardsonJacobi => {
                let goal = target * self.backend.inner_tolerance;
                let mut z = vec![0.0; x.len()];
                for k in 0..=self.backend.max_iterations {
                    let r = sub(x, &self.mul(&z, transpose));
                    let rn = norm2(&r);
                    if rn <= goal {
                        return Ok((
                            z,
                            CallReport {
                                iterations: k,
                                residual: rn / xnorm,
                            },
                        ));
                    }
                    if k == self.backend.max_iterations || !rn.is_finite() {
                        return Err(Error::BackendDiverged {
                            iterations: k,
                            residual: rn / xnorm,
                        });
                    }
                    for i in 0..z.len() {
                        if self.diag[i] <= 0.0 {
                            return Err(Error::Singular);
                        }
                        z[i] += 0.5 * r[i] / self.diag[i];
                    }
                }
                unreachable!()
            }
            BackendKind::ConjugateGradient => {
                // CGNR: minimizes ‖x − S z‖₂ over growing Krylov spaces of SᵀS
                let goal = target * self.backend.inner_tolerance;
                let n = x.len();
                let mut z = vec![0.0; n];
                let mut r = x.to_vec();
                let mut g = self.mul(&r, !transpose);
                let mut p = g.clone();
                let mut gamma = dot(&g, &g);
                for k in 0..=self.backend.max_iterations {
                    let rn = norm2(&r);
                    if rn <= goal {
                        // recompute the true residual before trusting the recurrence
                        let true_r = norm2(&sub(x, &self.mul(&z, transpose)));
                        if true_r <= target {
                            return Ok((
                                z,
                                CallReport {
                                    iterations: k,
                                    residual: true_r / xnorm,
                                },
                            ));
                        }
                    }
                    if k == self.backend.max_iterations || gamma == 0.0 || !rn.is_finite() {
                        return Err(Error::BackendDiverged {
                            iterations: k,
                            residual: rn / xnorm,
                        });
                    }
                    let q = self.mul(&p, transpose);
                    let qq = dot(&q, &q);
                    if qq == 0.0 {
                        return Err(Error::Singular);
                    }
                    let a = gamma / qq;
                    for i in 0..n {
                        z[i] += a * p[i];
                        r[i] -= a * q[i];
                    }
                    g = self.mul(&r, !transpose);
                    let gamma_new = dot(&g, &g);
                    let beta = gamma_new / gamma;
                    gamma = gamma_new;
                    for i in 0..n {
                        p[i] = g[i] + beta * p[i];
                    }
                }
                unreachable!()
            }
        }
    }

    pub(crate) fn into_operator(self, eps: f64, transpose: bool) -> LinearOperator {
        let dim = self.s.n_rows();
        let seed = self.backend.seed;
        let engine = Arc::new(self);
        LinearOperator::new(dim, eps, NormTag::L2, seed, move |x| engine.solve(x, eps, transpose))
    }
}

/// Builds `Z` with `‖x − S Z(x)‖₂ ≤ eps·‖x‖₂` for RCDD `S`.
pub fn build_rcdd_solver(s: &SparseMatrix, eps: f64, backend: BackendChoice) -> Result<LinearOperator> {
    validate_eps(eps)?;
    Ok(RcddEngine::new(s, backend)?.into_operator(eps, false))
}

/// Gershgorin bounds `(λ_lb, λ_ub)` on the spectrum of a symmetric matrix.
fn gershgorin(s: &SparseMatrix) -> (f64, f64) {
    let mut lb = f64::INFINITY;
    let mut ub: f64 = 0.0;
    for i in 0..s.n_rows() {
        let (cols, vals) = s.row(i);
        let mut d = 0.0;
        let mut off = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                d = v;
            } else {
                off += v.abs();
            }
        }
        lb = lb.min(d - off);
        ub = ub.max(d + off);
    }
    (lb.max(0.0), ub)
}

#[derive(Debug)]
struct SddEngine {
    s: SparseMatrix,
    backend: BackendChoice,
    lu: Option<SparseLu>,
    diag: Vec<f64>,
    bounds: (f64, f64),
}

/// Delay used by the Hestenes–Stiefel error estimate.
const HS_DELAY: usize = 4;

impl SddEngine {
    fn solve(&self, x: &[f64], eps: f64) -> Result<(Vec<f64>, CallReport)> {
        let n = x.len();
        if norm2(x) == 0.0 {
            return Ok((vec![0.0; n], zero_report()));
        }
        let (lb, ub) = self.bounds;
        match self.backend.kind {
            BackendKind::DirectLu => {
                let lu = self.lu.as_ref().expect("direct backend keeps its factors");
                let mut z = lu.solve(x);
                let mut steps = 0;
                loop {
                    let r = sub(x, &self.s.mul(&z));
                    // e = S⁻¹x − z solves S e = r, so ‖e‖²_S = eᵀr
                    let e = lu.solve(&r);
                    let err = dot(&e, &r).max(0.0).sqrt();
                    let exact: Vec<f64> = z.iter().zip(&e).map(|(a, b)| a + b).collect();
                    let total = dot(&exact, x).max(0.0).sqrt();
                    let rel = if total > 0.0 { err / total } else { 0.0 };
                    if rel <= eps {
                        return Ok((
                            z,
                            CallReport {
                                iterations: steps,
                                residual: rel,
                            },
                        ));
                    }
                    if steps == 3 || !rel.is_finite() {
                        return Err(Error::BackendDiverged {
                            iterations: steps,
                            residual: rel,
                        });
                    }
                    z = exact;
                    steps += 1;
                }
            }
            BackendKind::RichardsonJacobi => {
                if lb <= 0.0 {
                    return Err(Error::InvalidArgument(
                        "Jacobi backend on SDD input needs a strictly dominant row in every row".into(),
                    ));
                }
                // ‖e‖_S ≤ ‖r‖/√λmin and ‖S⁻¹x‖_S ≥ ‖x‖/√λmax
                let goal = eps * self.backend.inner_tolerance * norm2(x) * (lb / ub).sqrt();
                let mut z = vec![0.0; n];
                for k in 0..=self.backend.max_iterations {
                    let r = sub(x, &self.s.mul(&z));
                    let rn = norm2(&r);
                    if rn <= goal {
                        return Ok((
                            z,
                            CallReport {
                                iterations: k,
                                residual: rn / norm2(x) * (ub / lb).sqrt(),
                            },
                        ));
                    }
                    if k == self.backend.max_iterations || !rn.is_finite() {
                        return Err(Error::BackendDiverged {
                            iterations: k,
                            residual: rn / norm2(x),
                        });
                    }
                    for i in 0..n {
                        z[i] += 0.5 * r[i] / self.diag[i];
                    }
                }
                unreachable!()
            }
            BackendKind::ConjugateGradient => {
                let tol = eps * self.backend.inner_tolerance;
                let xnorm = norm2(x);
                let mut z = vec![0.0; n];
                let mut r = x.to_vec();
                let mut p = r.clone();
                let mut rr = dot(&r, &r);
                let mut terms: Vec<f64> = Vec::new();
                let mut energy = 0.0;
                for k in 0..=self.backend.max_iterations {
                    let rn = rr.sqrt();
                    let estimate = if lb > 0.0 {
                        Some(rn / xnorm * (ub / lb).sqrt())
                    } else if terms.len() >= HS_DELAY && energy > 0.0 {
                        // error of the iterate HS_DELAY steps back, which bounds the current one
                        let tail: f64 = terms[terms.len() - HS_DELAY..].iter().sum();
                        Some((tail / energy).sqrt())
                    } else {
                        None
                    };
                    if rr == 0.0 || estimate.is_some_and(|e| e <= tol) {
                        return Ok((
                            z,
                            CallReport {
                                iterations: k,
                                residual: estimate.unwrap_or(0.0),
                            },
                        ));
                    }
                    if k == self.backend.max_iterations || !rn.is_finite() {
                        return Err(Error::BackendDiverged {
                            iterations: k,
                            residual: estimate.unwrap_or(rn / xnorm),
                        });
                    }
                    let q = self.s.mul(&p);
                    let pq = dot(&p, &q);
                    if !(pq > 0.0) {
                        return Err(Error::NotSdd);
                    }
                    let a = rr / pq;
                    for i in 0..n {
                        z[i] += a * p[i];
                        r[i] -= a * q[i];
                    }
                    terms.push(a * rr);
                    energy += a * rr;
                    let rr_new = dot(&r, &r);
                    let beta = rr_new / rr;
                    rr = rr_new;
                    for i in 0..n {
                        p[i] = r[i] + beta * p[i];
                    }
                }
                unreachable!()
            }
        }
    }
}

/// True for symmetric matrices that are diagonally dominant up to `slack`.
pub fn is_sdd(s: &SparseMatrix, slack: f64) -> bool {
    s.is_symmetric(1e-12) && s.check_rcdd(slack)
}

/// Builds `Z` with `‖S⁻¹x − Z(x)‖_S ≤ eps·‖S⁻¹x‖_S` for SDD `S`.
pub fn build_sdd_solver(s: &SparseMatrix, eps: f64, backend: BackendChoice) -> Result<LinearOperator> {
    validate_eps(eps)?;
    backend.validate()?;
    s.require_square()?;
    if !is_sdd(s, DEFAULT_RCDD_SLACK) {
        return Err(Error::NotSdd);
    }
    let lu = match backend.kind {
        BackendKind::DirectLu => Some(SparseLu::factor(s)?),
        _ => None,
    };
    let engine = Arc::new(SddEngine {
        s: s.clone(),
        backend,
        lu,
        diag: s.diag(),
        bounds: gershgorin(s),
    });
    Ok(LinearOperator::new(s.n_rows(), eps, NormTag::Energy, backend.seed, move |x| {
        engine.solve(x, eps)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DenseVector {
        DenseVector::new(v.to_vec()).unwrap()
    }

    fn all_backends() -> [BackendChoice; 3] {
        [
            BackendChoice::new(BackendKind::DirectLu),
            BackendChoice::new(BackendKind::RichardsonJacobi),
            BackendChoice::new(BackendKind::ConjugateGradient),
        ]
    }

    #[test]
    fn identity_solver() {
        for backend in all_backends() {
            let z = build_rcdd_solver(&SparseMatrix::identity(3), 0.5, backend).unwrap();
            let (y, report) = z.apply_with_report(&dv(&[1.0, -2.0, 3.0])).unwrap();
            let err = norm2(&sub(&y, &[1.0, -2.0, 3.0]));
            assert!(err <= 0.5 * 14f64.sqrt());
            assert!(report.residual <= 0.5);
        }
        let z = build_rcdd_solver(&SparseMatrix::identity(3), 0.5, BackendChoice::default()).unwrap();
        let (y, report) = z.apply_with_report(&dv(&[1.0, -2.0, 3.0])).unwrap();
        assert_eq!(y.as_slice(), &[1.0, -2.0, 3.0]);
        assert_eq!(report.residual, 0.0);
    }

    #[test]
    fn two_cycle_row_sums() {
        let s = SparseMatrix::from_dense(&[vec![2.0, -1.0], vec![-1.0, 2.0]]).unwrap();
        let z = build_rcdd_solver(&s, 0.1, BackendChoice::default()).unwrap();
        let y = z.apply(&dv(&[1.0, 1.0])).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15);
        let w = build_sdd_solver(&s, 0.1, BackendChoice::default()).unwrap();
        assert_eq!(w.norm_tag(), NormTag::Energy);
        let y = w.apply(&dv(&[1.0, 1.0])).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_rcdd() {
        let s = SparseMatrix::from_dense(&[vec![1.0, -2.0], vec![-2.0, 1.0]]).unwrap();
        assert!(matches!(build_rcdd_solver(&s, 0.1, BackendChoice::default()), Err(Error::NotRcdd)));
        assert!(matches!(build_sdd_solver(&s, 0.1, BackendChoice::default()), Err(Error::NotSdd)));
        let ns = SparseMatrix::from_dense(&[vec![2.0, -1.0], vec![0.0, 2.0]]).unwrap();
        assert!(matches!(build_sdd_solver(&ns, 0.1, BackendChoice::default()), Err(Error::NotSdd)));
    }

    #[test]
    fn rejects_bad_eps() {
        let s = SparseMatrix::identity(2);
        assert!(build_rcdd_solver(&s, 0.0, BackendChoice::default()).is_err());
        assert!(build_rcdd_solver(&s, 1.0, BackendChoice::default()).is_err());
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        // weakly dominant path graph Laplacian plus a tiny shift: slow for Jacobi
        let n = 60;
        let mut t = Vec::new();
        for i in 0..n {
            let deg = if i == 0 || i + 1 == n { 1.0 } else { 2.0 };
            t.push((i, i, deg + 1e-6));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let s = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let backend = BackendChoice::new(BackendKind::RichardsonJacobi).with_max_iterations(5);
        let z = build_rcdd_solver(&s, 1e-6, backend).unwrap();
        let err = z.apply(&DenseVector::ones(n)).unwrap_err();
        assert!(matches!(err, Error::BackendDiverged { iterations: 5, .. }));
    }

    #[test]
    fn cg_on_singular_like_sdd_uses_estimate() {
        // path Laplacian plus one grounded vertex: SDD, Gershgorin bound is zero
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            let deg = if i == 0 || i + 1 == n { 1.0 } else { 2.0 };
            t.push((i, i, deg + if i == 0 { 1.0 } else { 0.0 }));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let s = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let cg = build_sdd_solver(&s, 1e-6, BackendChoice::new(BackendKind::ConjugateGradient)).unwrap();
        let z = cg.apply(&dv(&x)).unwrap();
        let exact = SparseLu::factor(&s).unwrap().solve(&x);
        let e: Vec<f64> = exact.iter().zip(z.iter()).map(|(a, b)| a - b).collect();
        let err = dot(&e, &s.mul(&e)).sqrt();
        let total = dot(&exact, &s.mul(&exact)).sqrt();
        assert!(err <= 1e-6 * total, "{err} vs {total}");
    }
}
