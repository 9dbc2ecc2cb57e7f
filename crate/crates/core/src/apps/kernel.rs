use std::path::Path;

use super::{decide_subcritical, solve_m_adaptive};
use crate::error::{Error, Result};
use crate::sparse::{dot, norm1, norm2, norm_inf, DenseVector, SparseMatrix};

/// Directed graph with integer edge labels in `1..=n_labels` and
/// nonnegative weights. Vertices are numbered from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph {
    n_vertices: usize,
    n_labels: u32,
    edges: Vec<(usize, usize, u32, f64)>,
}

impl LabeledGraph {
    pub fn new(n_vertices: usize, n_labels: u32, edges: Vec<(usize, usize, u32, f64)>) -> Result<Self> {
        for &(u, v, label, w) in &edges {
            if u >= n_vertices || v >= n_vertices {
                return Err(Error::IndexOutOfBounds {
                    row: u,
                    col: v,
                    rows: n_vertices,
                    cols: n_vertices,
                });
            }
            if label == 0 || label > n_labels {
                return Err(Error::InvalidArgument(format!("label {label} outside 1..={n_labels}")));
            }
            if !w.is_finite() {
                return Err(Error::NonFinite);
            }
            if w < 0.0 {
                return Err(Error::NegativeEntry { row: u, col: v });
            }
        }
        Ok(Self {
            n_vertices,
            n_labels,
            edges,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_labels(&self) -> u32 {
        self.n_labels
    }

    pub fn edges(&self) -> &[(usize, usize, u32, f64)] {
        &self.edges
    }
}

/// Reads the text format: a header `n m d`, then `m` lines `u v label weight`.
/// Blank lines and lines starting with `#` or `%` are skipped.
pub fn parse_labeled_graph(text: &str) -> Result<LabeledGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#') && !l.starts_with('%'));
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 3 {
        return Err(Error::Parse {
            line: hline,
            message: "header must be `n m d`".into(),
        });
    }
    let num = |s: &str, line: usize| -> Result<usize> {
        s.parse().map_err(|_| Error::Parse {
            line,
            message: format!("expected an integer, got `{s}`"),
        })
    };
    let n = num(head[0], hline)?;
    let m = num(head[1], hline)?;
    let d = num(head[2], hline)? as u32;
    let mut edges = Vec::with_capacity(m);
    for (line, text) in lines {
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() != 4 {
            return Err(Error::Parse {
                line,
                message: "edge line must be `u v label weight`".into(),
            });
        }
        let w: f64 = f[3].parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad weight `{}`", f[3]),
        })?;
        edges.push((num(f[0], line)?, num(f[1], line)?, num(f[2], line)? as u32, w));
    }
    if edges.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: edges.len(),
        });
    }
    LabeledGraph::new(n, d, edges)
}

pub fn load_labeled_graph(path: impl AsRef<Path>) -> Result<LabeledGraph> {
    parse_labeled_graph(&std::fs::read_to_string(path)?)
}

/// Weighted adjacency matrix of the product graph of `G` and `H`, whose
/// vertex `(u, v)` has index `u·|V_H| + v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductWeights {
    pub matrix: SparseMatrix,
    pub n_g: usize,
    pub n_h: usize,
}

impl ProductWeights {
    pub fn index(&self, u: usize, v: usize) -> usize {
        u * self.n_h + v
    }
}

/// Same-label indicator.
pub fn indicator_similarity(a: u32, b: u32) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Product graph where `(u,v) → (w,z)` is an edge when `u → w` in `G` and
/// `v → z` in `H`, weighted by `similarity(labels)·weight_G·weight_H`.
/// This is the tensor (Kronecker) product of the two edge sets.
pub fn product_graph<F>(g: &LabeledGraph, h: &LabeledGraph, similarity: F) -> Result<ProductWeights>
where
    F: Fn(u32, u32) -> f64,
{
    let nh = h.n_vertices;
    let n = g.n_vertices * nh;
    let mut triplets = Vec::new();
    for &(u, w, lg, wg) in &g.edges {
        for &(v, z, lh, wh) in &h.edges {
            let sim = similarity(lg, lh);
            if !(sim >= 0.0 && sim.is_finite()) {
                return Err(Error::InvalidArgument(format!("similarity({lg}, {lh}) = {sim}")));
            }
            let val = sim * wg * wh;
            if val != 0.0 {
                triplets.push((u * nh + v, w * nh + z, val));
            }
        }
    }
    Ok(ProductWeights {
        matrix: SparseMatrix::from_triplets(n, n, &triplets)?,
        n_g: g.n_vertices,
        n_h: nh,
    })
}

/// Kernel value with its propagated error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    /// Bound on `|value − qᵀ(I − λW)⁻¹p|` from the solver residual.
    pub error_bound: f64,
    pub iterations: usize,
}

fn check_distribution(x: &DenseVector, n: usize, name: &str) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    if x.iter().any(|&v| v < 0.0) || (norm1(x) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("{name} must be a probability vector")));
    }
    Ok(())
}

/// Random-walk kernel `qᵀ(I − λW)⁻¹p` with geometric decay `λ`.
///
/// `λρ(W) < 1` is confirmed with the M-matrix decision, otherwise the series
/// diverges and [`Error::KernelDiverges`] is returned. The linear solve has
/// `‖(I − λW)x − p‖₂ ≤ eps‖p‖₂`; the reported bound is
/// `‖q‖₂·eps·‖p‖₂·√(‖M⁻¹‖₁‖M⁻¹‖∞)` with the norms read off `M⁻¹𝟙` and `M⁻ᵀ𝟙`.
pub fn graph_kernel(w: &ProductWeights, p: &DenseVector, q: &DenseVector, lambda: f64, eps: f64) -> Result<KernelValue> {
    let n = w.matrix.require_square()?;
    check_distribution(p, n, "p")?;
    check_distribution(q, n, "q")?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be nonnegative, got {lambda}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    if lambda == 0.0 {
        return Ok(KernelValue {
            value: dot(q, p),
            error_bound: 0.0,
            iterations: 0,
        });
    }
    let a = w.matrix.scaled(lambda);
    if !decide_subcritical(&a)?.below {
        return Err(Error::KernelDiverges);
    }
    let (x, report) = solve_m_adaptive(&a, 1.0, p, eps)?;
    let ones = vec![1.0; n];
    let (row, _) = solve_m_adaptive(&a, 1.0, &ones, 1e-6)?;
    let (col, _) = solve_m_adaptive(&a.transpose(), 1.0, &ones, 1e-6)?;
    // the 1e-6 solves can undershoot the norms by at most that relative amount
    let inv_norm = (norm_inf(&row) * norm_inf(&col)).sqrt() * (1.0 + 1e-5);
    Ok(KernelValue {
        value: dot(q, &x),
        error_bound: norm2(q) * eps * norm2(p) * inv_norm,
        iterations: report.iterations,
    })
}
