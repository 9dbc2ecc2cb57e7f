use crate::error::{Error, Result};
use crate::rcdd::LinearOperator;
use crate::report::{SolveReport, SolveStatus};
use crate::sparse::{norm2, norm_inf, DenseVector};

/// Norm used for the stopping test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualNorm {
    L2,
    LInf,
}

impl ResidualNorm {
    pub(crate) fn eval(self, x: &[f64]) -> f64 {
        match self {
            ResidualNorm::L2 => norm2(x),
            ResidualNorm::LInf => norm_inf(x),
        }
    }
}

/// Stopping rule for [`prec_richardson`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RichardsonConfig {
    /// Stop once `‖Mx − b‖ < tolerance·‖Mx₀ − b‖`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub residual_norm: ResidualNorm,
}

impl RichardsonConfig {
    pub fn new(tolerance: f64, max_iterations: usize) -> Self {
        Self {
            tolerance,
            max_iterations,
            residual_norm: ResidualNorm::L2,
        }
    }
}

/// Preconditioned Richardson iteration `x ← x − P(Mx − b)`.
///
/// Hitting the cap is reported through the status with the best iterate
/// seen; only failures of `P` itself are errors.
pub fn prec_richardson<F>(
    m: F,
    p: &LinearOperator,
    b: &DenseVector,
    x0: &DenseVector,
    cfg: &RichardsonConfig,
) -> Result<(DenseVector, SolveReport)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if b.len() != p.dim() || x0.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: if b.len() != p.dim() { b.len() } else { x0.len() },
        });
    }
    if cfg.max_iterations == 0 {
        return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
    }
    let (x, report) = richardson(&m, |r| p.apply_slice(r), b, x0, cfg)?;
    Ok((DenseVector::new(x)?, report))
}

pub(crate) fn richardson<F, P>(
    m: &F,
    p: P,
    b: &[f64],
    x0: &[f64],
    cfg: &RichardsonConfig,
) -> Result<(Vec<f64>, SolveReport)>
where
    F: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let residual_of = |x: &[f64]| -> Vec<f64> { m(x).iter().zip(b).map(|(a, c)| a - c).collect() };
    let mut x = x0.to_vec();
    let mut r = residual_of(&x);
    let r0 = cfg.residual_norm.eval(&r);
    let mut residuals = vec![r0];
    let mut best = (r0, x.clone());
    let mut k = 0;
    loop {
        let rn = *residuals.last().expect("nonempty");
        if rn == 0.0 || rn < cfg.tolerance * r0 {
            return Ok((
                x,
                SolveReport {
                    status: SolveStatus::Converged,
                    iterations: k,
                    residuals,
                    phases: Vec::new(),
                },
            ));
        }
        if k == cfg.max_iterations || !rn.is_finite() {
            return Ok((
                best.1,
                SolveReport {
                    status: SolveStatus::IterationCapHit { phase: 0 },
                    iterations: k,
                    residuals,
                    phases: Vec::new(),
                },
            ));
        }
        let step = p(&r)?;
        x.iter_mut().zip(&step).for_each(|(xi, si)| *xi -= si);
        r = residual_of(&x);
        let rn = cfg.residual_norm.eval(&r);
        residuals.push(rn);
        if rn < best.0 {
            best = (rn, x.clone());
        }
        k += 1;
    }
}
