//! Left-looking sparse LU with threshold partial pivoting.
//!
//! Computes `P A = L U` column by column: each column of `A` is solved
//! against the partial `L` through a depth-first reach, then the pivot is
//! chosen among rows not yet pivotal. The diagonal is kept whenever it is
//! within `threshold` of the largest candidate, which preserves the natural
//! ordering on diagonally dominant input.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Sparse LU factors of a square matrix.
#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    // unit lower triangular; the first entry of every column is the unit diagonal
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    // upper triangular; the last entry of every column is the diagonal
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    // original row -> pivot position
    pinv: Vec<usize>,
}

const UNSET: usize = usize::MAX;

impl SparseLu {
    /// Factors `a` with the default diagonal-preference threshold 0.1.
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        Self::factor_with_threshold(a, 0.1)
    }

    pub fn factor_with_threshold(a: &SparseMatrix, threshold: f64) -> Result<Self> {
        let n = a.require_square()?;
        let a_ptr = a.col_ptr();
        let a_idx = a.row_idx();
        let a_val = a.col_vals();

        let mut l_ptr = Vec::with_capacity(n + 1);
        let mut l_idx = Vec::new();
        let mut l_val = Vec::new();
        let mut u_ptr = Vec::with_capacity(n + 1);
        let mut u_idx = Vec::new();
        let mut u_val = Vec::new();
        let mut pinv = vec![UNSET; n];

        let mut x = vec![0.0; n];
        let mut xi = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut pstack = vec![0usize; n];
        let mut marked = vec![false; n];

        for k in 0..n {
            l_ptr.push(l_idx.len());
            u_ptr.push(u_idx.len());

            // reach of column k through the current L, in topological order xi[top..n]
            let mut top = n;
            for &i in &a_idx[a_ptr[k]..a_ptr[k + 1]] {
                if !marked[i] {
                    top = dfs(i, &l_ptr, &l_idx, &pinv, top, &mut xi, &mut stack, &mut pstack, &mut marked);
                }
            }
            for &i in &xi[top..n] {
                marked[i] = false;
                x[i] = 0.0;
            }
            for p in a_ptr[k]..a_ptr[k + 1] {
                x[a_idx[p]] = a_val[p];
            }
            for px in top..n {
                let j = xi[px];
                let col = pinv[j];
                if col == UNSET {
                    continue;
                }
                let xj = x[j];
                // skip the unit diagonal stored first
                for p in l_ptr[col] + 1..l_end(&l_ptr, l_idx.len(), col) {
                    x[l_idx[p]] -= l_val[p] * xj;
                }
            }

            let mut ipiv = UNSET;
            let mut best = -1.0;
            for &i in &xi[top..n] {
                if pinv[i] == UNSET {
                    let v = x[i].abs();
                    if v > best {
                        best = v;
                        ipiv = i;
                    }
                } else {
                    u_idx.push(pinv[i]);
                    u_val.push(x[i]);
                }
            }
            if ipiv == UNSET || !(best > 0.0) || !best.is_finite() {
                return Err(Error::Singular);
            }
            if pinv[k] == UNSET && x[k].abs() >= threshold * best {
                ipiv = k;
            }
            let pivot = x[ipiv];
            u_idx.push(k);
            u_val.push(pivot);
            pinv[ipiv] = k;
            l_idx.push(ipiv);
            l_val.push(1.0);
            for &i in &xi[top..n] {
                if pinv[i] == UNSET {
                    l_idx.push(i);
                    l_val.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }
        }
        l_ptr.push(l_idx.len());
        u_ptr.push(u_idx.len());
        for i in l_idx.iter_mut() {
            *i = pinv[*i];
        }
        Ok(Self {
            n,
            l_ptr,
            l_idx,
            l_val,
            u_ptr,
            u_idx,
            u_val,
            pinv,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of `L` and `U` combined.
    pub fn factor_nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[self.pinv[i]] = b[i];
        }
        for j in 0..n {
            let yj = y[j];
            for p in self.l_ptr[j] + 1..self.l_ptr[j + 1] {
                y[self.l_idx[p]] -= self.l_val[p] * yj;
            }
        }
        for j in (0..n).rev() {
            let last = self.u_ptr[j + 1] - 1;
            y[j] /= self.u_val[last];
            let yj = y[j];
            for p in self.u_ptr[j]..last {
                y[self.u_idx[p]] -= self.u_val[p] * yj;
            }
        }
        y
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z = b.to_vec();
        for j in 0..n {
            let last = self.u_ptr[j + 1] - 1;
            let mut acc = z[j];
            for p in self.u_ptr[j]..last {
                acc -= self.u_val[p] * z[self.u_idx[p]];
            }
            z[j] = acc / self.u_val[last];
        }
        for j in (0..n).rev() {
            let mut acc = z[j];
            for p in self.l_ptr[j] + 1..self.l_ptr[j + 1] {
                acc -= self.l_val[p] * z[self.l_idx[p]];
            }
            z[j] = acc;
        }
        (0..n).map(|i| z[self.pinv[i]]).collect()
    }
}

fn l_end(l_ptr: &[usize], len: usize, col: usize) -> usize {
    if col + 1 < l_ptr.len() {
        l_ptr[col + 1]
    } else {
        len
    }
}

/// Iterative depth-first search from `start` over the columns of `L`
/// reachable through pivotal rows. Finished nodes are pushed onto
/// `xi[..top]` from the back.
#[allow(clippy::too_many_arguments)]
fn dfs(
    start: usize,
    l_ptr: &[usize],
    l_idx: &[usize],
    pinv: &[usize],
    mut top: usize,
    xi: &mut [usize],
    stack: &mut [usize],
    pstack: &mut [usize],
    marked: &mut [bool],
) -> usize {
    let mut head = 0usize;
    stack[0] = start;
    loop {
        let j = stack[head];
        let col = pinv[j];
        if !marked[j] {
            marked[j] = true;
            pstack[head] = if col == UNSET { 0 } else { l_ptr[col] + 1 };
        }
        let end = if col == UNSET { 0 } else { l_end(l_ptr, l_idx.len(), col) };
        let mut done = true;
        let mut p = pstack[head];
        while p < end {
            let i = l_idx[p];
            p += 1;
            if !marked[i] {
                pstack[head] = p;
                head += 1;
                stack[head] = i;
                done = false;
                break;
            }
        }
        if done {
            top -= 1;
            xi[top] = j;
            if head == 0 {
                return top;
            }
            head -= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
        a.mul(x).iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn solves_permuted_system() {
        // forces row exchanges
        let a = SparseMatrix::from_dense(&[vec![0.0, 2.0, 1.0], vec![1.0, 0.0, 0.0], vec![3.0, 1.0, 0.0]]).unwrap();
        let lu = SparseLu::factor(&a).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = lu.solve(&b);
        assert!(residual(&a, &x, &b) < 1e-14);
        let xt = lu.solve_transpose(&b);
        assert!(residual(&a.transpose(), &xt, &b) < 1e-14);
    }

    #[test]
    fn singular_detected() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(SparseLu::factor(&a), Err(Error::Singular)));
        let z = SparseMatrix::zeros(2, 2);
        assert!(matches!(SparseLu::factor(&z), Err(Error::Singular)));
    }

    #[test]
    fn identity_is_trivial() {
        let lu = SparseLu::factor(&SparseMatrix::identity(4)).unwrap();
        assert_eq!(lu.solve(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(lu.factor_nnz(), 8);
    }

    #[test]
    fn tridiagonal_fill_free() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.5));
            }
        }
        let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let lu = SparseLu::factor(&a).unwrap();
        assert_eq!(lu.factor_nnz(), 3 * n - 2 + n);
        let b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        assert!(residual(&a, &lu.solve(&b), &b) < 1e-12);
        assert!(residual(&a.transpose(), &lu.solve_transpose(&b), &b) < 1e-12);
    }
}
