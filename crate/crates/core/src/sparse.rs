//! Compressed sparse storage, dense vectors, norms and structural checks.

use std::collections::VecDeque;
use std::ops::Deref;

use crate::error::{Error, Result};

/// Default relative slack used when verifying computed scalings.
pub const DEFAULT_RCDD_SLACK: f64 = 1e-12;

/// A vector of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    values: Vec<f64>,
}

impl DenseVector {
    /// Wraps `values`, rejecting NaN and infinities.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn ones(n: usize) -> Self {
        Self { values: vec![1.0; n] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn norm1(&self) -> f64 {
        norm1(&self.values)
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.values)
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.values)
    }

    /// Ratio of largest to smallest entry. Only meaningful for positive vectors.
    pub fn condition(&self) -> f64 {
        vector_condition(&self.values)
    }
}

impl Deref for DenseVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

impl TryFrom<Vec<f64>> for DenseVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

pub(crate) fn norm1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn vector_condition(x: &[f64]) -> f64 {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// Induced 1- and infinity-norms of a matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    /// Largest absolute column sum.
    pub norm_1: f64,
    /// Largest absolute row sum.
    pub norm_inf: f64,
}

impl NormReport {
    pub fn max(&self) -> f64 {
        self.norm_1.max(self.norm_inf)
    }
}

/// Sparse matrix in compressed row form with an eagerly built column view.
///
/// Column indices inside each row (and row indices inside each column) are
/// sorted. Duplicates are summed on construction and zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    row_vals: Vec<f64>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    col_vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        for &(row, col, value) in triplets {
            if row >= n_rows || col >= n_cols {
                return Err(Error::IndexOutOfBounds {
                    row,
                    col,
                    rows: n_rows,
                    cols: n_cols,
                });
            }
            if !value.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(sorted.len());
        for (row, col, value) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == row && last.1 == col => last.2 += value,
                _ => merged.push((row, col, value)),
            }
        }
        merged.retain(|t| t.2 != 0.0);
        if merged.iter().any(|t| !t.2.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self::from_sorted_unique(n_rows, n_cols, &merged))
    }

    /// `merged` must be sorted by (row, col), duplicate free and zero free.
    fn from_sorted_unique(n_rows: usize, n_cols: usize, merged: &[(usize, usize, f64)]) -> Self {
        let nnz = merged.len();
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(nnz);
        let mut row_vals = Vec::with_capacity(nnz);
        for &(row, col, value) in merged {
            row_ptr[row + 1] += 1;
            col_idx.push(col);
            row_vals.push(value);
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }

        let mut col_ptr = vec![0usize; n_cols + 1];
        for &(_, col, _) in merged {
            col_ptr[col + 1] += 1;
        }
        for j in 0..n_cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut next = col_ptr.clone();
        let mut row_idx = vec![0usize; nnz];
        let mut col_vals = vec![0.0; nnz];
        // rows arrive in increasing order, so each column ends up sorted
        for &(row, col, value) in merged {
            let slot = next[col];
            row_idx[slot] = row;
            col_vals[slot] = value;
            next[col] += 1;
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            row_vals,
            col_ptr,
            row_idx,
            col_vals,
        }
    }

    /// Builds a matrix from dense rows, dropping zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n_rows, n_cols, &triplets)
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self::from_sorted_unique(n_rows, n_cols, &[])
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    /// Square diagonal matrix with the given diagonal. Zero entries are dropped.
    pub fn diagonal(d: &[f64]) -> Self {
        let merged: Vec<_> = d
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, &v)| (i, i, v))
            .collect();
        Self::from_sorted_unique(d.len(), d.len(), &merged)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Number of stored nonzeros.
    pub fn nnz(&self) -> usize {
        self.row_vals.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub(crate) fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.n_rows)
        } else {
            Err(Error::NotSquare {
                rows: self.n_rows,
                cols: self.n_cols,
            })
        }
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i >= self.n_rows || j >= self.n_cols {
            return 0.0;
        }
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.row_vals[range])
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[range.clone()], &self.col_vals[range])
    }

    pub(crate) fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub(crate) fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub(crate) fn col_vals(&self) -> &[f64] {
        &self.col_vals
    }

    /// All stored entries in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out.push((i, j, v));
            }
        }
        out
    }

    /// Diagonal entries of a square matrix.
    pub fn diag(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> SparseMatrix {
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr: self.col_ptr.clone(),
            col_idx: self.row_idx.clone(),
            row_vals: self.col_vals.clone(),
            col_ptr: self.row_ptr.clone(),
            row_idx: self.col_idx.clone(),
            col_vals: self.row_vals.clone(),
        }
    }

    /// `y = A x`, or `y = Aᵀ x` when `transpose` is set.
    pub fn matvec(&self, x: &DenseVector, transpose: bool) -> Result<DenseVector> {
        let expected = if transpose { self.n_rows } else { self.n_cols };
        if x.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: x.len(),
            });
        }
        let y = if transpose { self.mul_t(x) } else { self.mul(x) };
        DenseVector::new(y)
    }

    pub(crate) fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
        y
    }

    pub(crate) fn mul_t(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_cols];
        for (j, yj) in y.iter_mut().enumerate() {
            let (rows, vals) = self.col(j);
            *yj = rows.iter().zip(vals).map(|(&i, &v)| v * x[i]).sum();
        }
        y
    }

    /// `c·x − A x` (or with `Aᵀ`), the action of the shifted matrix `cI − A`.
    pub(crate) fn shifted_mul(&self, c: f64, x: &[f64], transpose: bool) -> Vec<f64> {
        let ax = if transpose { self.mul_t(x) } else { self.mul(x) };
        x.iter().zip(ax).map(|(xi, axi)| c * xi - axi).collect()
    }

    /// `c·I + beta·A` for square `A`.
    pub fn identity_combination(&self, c: f64, beta: f64) -> Result<SparseMatrix> {
        let n = self.require_square()?;
        let mut triplets: Vec<(usize, usize, f64)> =
            self.triplets().into_iter().map(|(i, j, v)| (i, j, beta * v)).collect();
        triplets.extend((0..n).map(|i| (i, i, c)));
        SparseMatrix::from_triplets(n, n, &triplets)
    }

    /// Every entry multiplied by `c`.
    pub fn scaled(&self, c: f64) -> SparseMatrix {
        let merged: Vec<_> = self
            .triplets()
            .into_iter()
            .map(|(i, j, v)| (i, j, c * v))
            .filter(|t| t.2 != 0.0)
            .collect();
        Self::from_sorted_unique(self.n_rows, self.n_cols, &merged)
    }

    /// Sparse product `self · other`.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                found: other.n_rows,
            });
        }
        let mut acc = vec![0.0; other.n_cols];
        let mut touched = vec![false; other.n_cols];
        let mut pattern = Vec::new();
        let mut merged = Vec::new();
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&k, &a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(k);
                for (&j, &b) in ocols.iter().zip(ovals) {
                    if !touched[j] {
                        touched[j] = true;
                        pattern.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            pattern.sort_unstable();
            for &j in &pattern {
                if acc[j] != 0.0 {
                    merged.push((i, j, acc[j]));
                }
                acc[j] = 0.0;
                touched[j] = false;
            }
            pattern.clear();
        }
        Ok(Self::from_sorted_unique(self.n_rows, other.n_cols, &merged))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.row_vals.iter().all(|&v| v >= 0.0)
    }

    pub(crate) fn require_nonnegative(&self) -> Result<()> {
        match self.triplets().into_iter().find(|t| t.2 < 0.0) {
            Some((row, col, _)) => Err(Error::NegativeEntry { row, col }),
            None => Ok(()),
        }
    }

    /// True when `|A_ij − A_ji| ≤ tol·max(|A_ij|, |A_ji|)` for every stored pair.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        self.triplets().into_iter().all(|(i, j, v)| {
            let w = self.get(j, i);
            (v - w).abs() <= tol * v.abs().max(w.abs())
        })
    }

    /// Induced 1- and infinity-norms.
    pub fn induced_norms(&self) -> NormReport {
        let norm_inf = (0..self.n_rows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let norm_1 = (0..self.n_cols)
            .map(|j| self.col(j).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        NormReport { norm_1, norm_inf }
    }

    /// Strong connectivity of the directed graph with an edge `i → j` for every
    /// stored `A_ij`. A 1×1 matrix counts as irreducible.
    pub fn is_irreducible(&self) -> bool {
        if !self.is_square() || self.n_rows == 0 {
            return false;
        }
        let n = self.n_rows;
        if n == 1 {
            return true;
        }
        let forward = self.reach_from_zero(|i| self.row(i).0);
        let backward = self.reach_from_zero(|j| self.col(j).0);
        forward == n && backward == n
    }

    fn reach_from_zero<'a, F>(&'a self, neighbors: F) -> usize
    where
        F: Fn(usize) -> &'a [usize],
    {
        let mut seen = vec![false; self.n_rows];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count
    }

    /// Strongly connected components, each sorted, in a deterministic order.
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.n_rows;
        // iterative Tarjan
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut components = Vec::new();
        let mut counter = 0;
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            let mut call: Vec<(usize, usize)> = vec![(root, 0)];
            index[root] = counter;
            low[root] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root] = true;
            while let Some(&mut (v, ref mut pos)) = call.last_mut() {
                let (succ, _) = self.row(v);
                if *pos < succ.len() {
                    let w = succ[*pos];
                    *pos += 1;
                    if index[w] == usize::MAX {
                        index[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    call.pop();
                    if let Some(&(parent, _)) = call.last() {
                        low[parent] = low[parent].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().expect("tarjan stack");
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        components.push(comp);
                    }
                }
            }
        }
        components
    }

    /// Principal submatrix on the sorted index set `idx`.
    pub fn principal_submatrix(&self, idx: &[usize]) -> SparseMatrix {
        let mut position = vec![usize::MAX; self.n_rows];
        for (p, &i) in idx.iter().enumerate() {
            position[i] = p;
        }
        let mut merged = Vec::new();
        for (p, &i) in idx.iter().enumerate() {
            let (cols, vals) = self.row(i);
            let mut entries: Vec<_> = cols
                .iter()
                .zip(vals)
                .filter(|(&j, _)| position[j] != usize::MAX)
                .map(|(&j, &v)| (p, position[j], v))
                .collect();
            entries.sort_by_key(|t| t.1);
            merged.extend(entries);
        }
        Self::from_sorted_unique(idx.len(), idx.len(), &merged)
    }

    /// Row and column diagonal-dominance margins `S_ii − Σ_{j≠i} |S_ij|`.
    pub fn dominance_margins(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_rows.min(self.n_cols);
        let margin = |idx: &[usize], vals: &[f64], i: usize| {
            let mut diag = 0.0;
            let mut off = 0.0;
            for (&j, &v) in idx.iter().zip(vals) {
                if j == i {
                    diag = v;
                } else {
                    off += v.abs();
                }
            }
            diag - off
        };
        let rows = (0..n)
            .map(|i| {
                let (c, v) = self.row(i);
                margin(c, v, i)
            })
            .collect();
        let cols = (0..n)
            .map(|j| {
                let (r, v) = self.col(j);
                margin(r, v, j)
            })
            .collect();
        (rows, cols)
    }

    /// Row-column diagonal dominance with margin at least `−slack·(|S_ii| + 1)`.
    pub fn check_rcdd(&self, strict_slack: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let (rows, cols) = self.dominance_margins();
        (0..self.n_rows).all(|i| {
            let tol = -strict_slack * (self.get(i, i).abs() + 1.0);
            rows[i] >= tol && cols[i] >= tol
        })
    }

    /// `diag(left) · M · diag(right)`.
    pub fn apply_scaling(&self, left: &[f64], right: &[f64]) -> Result<SparseMatrix> {
        if left.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                found: left.len(),
            });
        }
        if right.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                found: right.len(),
            });
        }
        for (index, v) in left.iter().chain(right).enumerate() {
            if !(*v > 0.0) || !v.is_finite() {
                let index = if index >= left.len() { index - left.len() } else { index };
                return Err(Error::NonpositiveScaling { index });
            }
        }
        let merged: Vec<_> = self
            .triplets()
            .into_iter()
            .map(|(i, j, v)| (i, j, left[i] * v * right[j]))
            .filter(|t| t.2 != 0.0)
            .collect();
        Ok(Self::from_sorted_unique(self.n_rows, self.n_cols, &merged))
    }
}

/// Free-function form of [`SparseMatrix::matvec`].
pub fn matvec(a: &SparseMatrix, x: &DenseVector, transpose: bool) -> Result<DenseVector> {
    a.matvec(x, transpose)
}

/// Free-function form of [`SparseMatrix::induced_norms`].
pub fn induced_norms(a: &SparseMatrix) -> NormReport {
    a.induced_norms()
}

/// Free-function form of [`SparseMatrix::is_irreducible`].
pub fn is_irreducible(a: &SparseMatrix) -> bool {
    a.is_irreducible()
}

/// Free-function form of [`SparseMatrix::check_rcdd`].
pub fn check_rcdd(s: &SparseMatrix, strict_slack: f64) -> bool {
    s.check_rcdd(strict_slack)
}

/// `diag(l) · m · diag(r)`.
pub fn apply_scaling(l: &DenseVector, m: &SparseMatrix, r: &DenseVector) -> Result<SparseMatrix> {
    m.apply_scaling(l, r)
}
