//! Dense brute-force references.
//!
//! Everything here works on row-major dense storage with textbook loops and
//! shares no code with the sparse solvers, so tests can hold the rest of the
//! crate against it. Nothing is tuned for speed.

use crate::apps::SingularTriplet;
use crate::error::{Error, Result};
use crate::sparse::{DenseVector, SparseMatrix};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                found: r.len(),
            });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn from_sparse(a: &SparseMatrix) -> Self {
        let mut m = Self::zeros(a.n_rows(), a.n_cols());
        for (i, j, v) in a.triplets() {
            m.values[i * m.cols + j] += v;
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j) * x[i]).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut c = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    c.values[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        c
    }

    /// `c·I + beta·self`.
    pub fn shifted(&self, c: f64, beta: f64) -> Self {
        assert_eq!(self.rows, self.cols);
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= beta);
        for i in 0..self.rows {
            m.values[i * self.cols + i] += c;
        }
        m
    }

    pub fn scale_rows_cols(&self, left: &[f64], right: &[f64]) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.values[i * self.cols + j] *= left[i] * right[j];
            }
        }
        m
    }

    pub fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn linf(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

const PIVOT_FLOOR: f64 = 1e-300;
const MAX_POWER_STEPS: usize = 1_000_000;

/// Gaussian elimination with partial pivoting. Returns `x` and `‖Mx − b‖₂`.
pub fn dense_solve(m: &DenseMatrix, b: &[f64]) -> Result<(DenseVector, f64)> {
    let n = m.rows;
    if m.cols != n {
        return Err(Error::NotSquare { rows: m.rows, cols: m.cols });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    let mut a = m.values.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
            .expect("nonempty range");
        if a[p * n + k].abs() < PIVOT_FLOOR {
            return Err(Error::Singular);
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        for i in k + 1..n {
            let f = a[i * n + k] / a[k * n + k];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                a[i * n + j] -= f * a[k * n + j];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k * n + j] * x[j]).sum();
        x[k] = (x[k] - s) / a[k * n + k];
    }
    let mx = m.matvec(&x);
    let residual = l2(&mx.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>());
    Ok((DenseVector::new(x)?, residual))
}

/// Inverse by column-wise [`dense_solve`].
pub fn dense_inverse(m: &DenseMatrix) -> Result<DenseMatrix> {
    let n = m.rows;
    let mut inv = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let (col, _) = dense_solve(m, &e)?;
        for i in 0..n {
            inv.set(i, j, col[i]);
        }
    }
    Ok(inv)
}

/// Spectral radius and Perron vector of an irreducible nonnegative matrix.
///
/// Power iteration on `(I + A/c)/2` from `𝟙`, with `c` the current upper
/// Collatz–Wielandt bound; the averaging removes period-2 oscillation.
/// Stops once the Collatz–Wielandt bracket `[lo, hi]` of the iterate has
/// `hi − lo ≤ tol·hi` and returns its midpoint with `‖v‖∞ = 1`.
pub fn dense_spectral_radius(a: &DenseMatrix, tol: f64) -> Result<(f64, DenseVector)> {
    let n = a.rows;
    if a.cols != n {
        return Err(Error::NotSquare { rows: a.rows, cols: a.cols });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    if a.values.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument("matrix must be nonnegative".into()));
    }
    let mut x = vec![1.0; n];
    for _ in 0..MAX_POWER_STEPS {
        let ax = a.matvec(&x);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (p, q) in ax.iter().zip(&x) {
            let r = p / q;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if hi == 0.0 {
            return Ok((0.0, DenseVector::new(x)?));
        }
        if hi - lo <= tol * hi {
            return Ok((0.5 * (lo + hi), DenseVector::new(x)?));
        }
        let mut next: Vec<f64> = x.iter().zip(&ax).map(|(p, q)| 0.5 * (p + q / hi)).collect();
        let m = linf(&next);
        next.iter_mut().for_each(|v| *v /= m);
        if next.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidArgument("matrix must be irreducible".into()));
        }
        x = next;
    }
    Err(Error::NoConvergence {
        iterations: MAX_POWER_STEPS,
    })
}

/// Largest eigenvalue of the symmetric positive semidefinite `BᵀB` by power
/// iteration from `start`; returns `(λ, unit eigenvector)`.
fn gram_power(b: &DenseMatrix, start: Vec<f64>, tol: f64) -> Result<(f64, Vec<f64>)> {
    let mut x = start;
    let nx = l2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut prev = f64::NAN;
    for _ in 0..MAX_POWER_STEPS {
        let y = b.matvec_t(&b.matvec(&x));
        let lambda: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
        let ny = l2(&y);
        if ny == 0.0 {
            return Ok((0.0, x));
        }
        x = y.iter().map(|v| v / ny).collect();
        if (lambda - prev).abs() <= tol * lambda {
            return Ok((lambda, x));
        }
        prev = lambda;
    }
    Err(Error::NoConvergence {
        iterations: MAX_POWER_STEPS,
    })
}

/// Top singular triplet of a nonnegative matrix by power iteration on `AᵀA`.
pub fn dense_svd_top(a: &DenseMatrix, tol: f64) -> Result<SingularTriplet> {
    if a.values.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument("matrix must be nonnegative".into()));
    }
    let (lambda, right) = gram_power(a, vec![1.0; a.cols], tol)?;
    let sigma = lambda.sqrt();
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument("matrix is zero".into()));
    }
    let av = a.matvec(&right);
    let left: Vec<f64> = av.iter().map(|v| v / l2(&av)).collect();
    let r1: Vec<f64> = av.iter().zip(&left).map(|(p, q)| p - sigma * q).collect();
    let atu = a.matvec_t(&left);
    let r2: Vec<f64> = atu.iter().zip(&right).map(|(p, q)| p - sigma * q).collect();
    Ok(SingularTriplet {
        sigma,
        left: DenseVector::new(left)?,
        right: DenseVector::new(right)?,
        residuals: (l2(&r1), l2(&r2)),
    })
}

/// Spectral norm `‖B‖₂` of an arbitrary dense matrix.
///
/// Power iteration on `BᵀB` from a fixed start with all components nonzero.
/// Converges from below, so callers checking `‖B‖₂ ≤ c` should use a tight `tol`.
pub fn dense_norm2(b: &DenseMatrix, tol: f64) -> Result<f64> {
    if b.cols == 0 || b.rows == 0 {
        return Ok(0.0);
    }
    let start: Vec<f64> = (0..b.cols).map(|i| 1.0 + ((i as f64) * 0.618_033_988_75).fract()).collect();
    let (lambda, _) = gram_power(b, start, tol)?;
    Ok(lambda.max(0.0).sqrt())
}
