use crate::error::{Error, Result};
use crate::perron::compute_perron;
use crate::sparse::{norm2, DenseVector, SparseMatrix};

/// Top singular value with unit singular vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularTriplet {
    pub sigma: f64,
    pub left: DenseVector,
    pub right: DenseVector,
    /// `(‖A·right − σ·left‖₂, ‖Aᵀ·left − σ·right‖₂)`.
    pub residuals: (f64, f64),
}

fn unit(x: &[f64]) -> Vec<f64> {
    let n = norm2(x);
    x.iter().map(|v| v / n).collect()
}

/// Largest singular value of `A ≥ 0` from the Perron values of `AᵀA` and `AAᵀ`.
///
/// Both Gram matrices are formed explicitly and must be irreducible. With
/// the Perron guarantee on `s = σ²`, the returned `σ` lies within relative
/// `delta` of the true value.
pub fn top_singular(a: &SparseMatrix, delta: f64) -> Result<SingularTriplet> {
    a.require_nonnegative()?;
    if a.n_rows() == 0 || a.n_cols() == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let at = a.transpose();
    let ata = at.matmul(a)?;
    let aat = a.matmul(&at)?;
    if !ata.is_irreducible() || !aat.is_irreducible() || ata.nnz() == 0 {
        return Err(Error::ReducibleGram);
    }
    let right_cert = compute_perron(&ata, delta)?;
    let left_cert = compute_perron(&aat, delta)?;
    let sigma = right_cert.s.sqrt();
    let right = unit(&right_cert.right);
    let left = unit(&left_cert.right);
    let r1: Vec<f64> = a.mul(&right).iter().zip(&left).map(|(p, q)| p - sigma * q).collect();
    let r2: Vec<f64> = at.mul(&left).iter().zip(&right).map(|(p, q)| p - sigma * q).collect();
    Ok(SingularTriplet {
        sigma,
        left: DenseVector::new(left)?,
        right: DenseVector::new(right)?,
        residuals: (norm2(&r1), norm2(&r2)),
    })
}
