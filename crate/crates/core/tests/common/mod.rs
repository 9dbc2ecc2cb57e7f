//! Seeded generators and dense helpers shared by the integration tests.
#![allow(dead_code)]

use perron_core::oracle::{dense_inverse, dense_spectral_radius, DenseMatrix};
use perron_core::{DenseVector, SparseMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

/// Random nonnegative matrix with the given density and log-uniform weights,
/// made irreducible by overlaying a random Hamiltonian cycle.
pub fn random_irreducible(rng: &mut ChaCha8Rng, n: usize, density: f64, lo: f64, hi: f64) -> SparseMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rng.gen_bool(density) {
                t.push((i, j, log_uniform(rng, lo, hi)));
            }
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    if n > 1 {
        for k in 0..n {
            t.push((perm[k], perm[(k + 1) % n], log_uniform(rng, lo, hi)));
        }
    }
    let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
    assert!(a.is_irreducible());
    a
}

/// Random symmetric irreducible nonnegative matrix with zero diagonal.
pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, density: f64) -> SparseMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                let w = rng.gen_range(0.1..1.0);
                t.push((i, j, w));
                t.push((j, i, w));
            }
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    for k in 1..n {
        let w = rng.gen_range(0.1..1.0);
        t.push((perm[k - 1], perm[k], w));
        t.push((perm[k], perm[k - 1], w));
    }
    SparseMatrix::from_triplets(n, n, &t).unwrap()
}

/// `CᵀC` where `C` has `2n` random rows with two nonzeros of random sign
/// plus one small one-sparse row per column, which keeps the product
/// positive definite.
pub fn factor_width2(rng: &mut ChaCha8Rng, n: usize) -> SparseMatrix {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let sign = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    for _ in 0..2 * n {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n);
        while j == i {
            j = rng.gen_range(0..n);
        }
        rows.push(vec![
            (i, sign(rng) * rng.gen_range(0.2..1.5)),
            (j, sign(rng) * rng.gen_range(0.2..1.5)),
        ]);
    }
    for i in 0..n {
        rows.push(vec![(i, rng.gen_range(0.1..0.6))]);
    }
    let mut t = Vec::new();
    for row in &rows {
        for &(i, a) in row {
            for &(j, b) in row {
                t.push((i, j, a * b));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &t).unwrap()
}

pub fn dense(a: &SparseMatrix) -> DenseMatrix {
    DenseMatrix::from_sparse(a)
}

pub fn rho(a: &SparseMatrix) -> f64 {
    dense_spectral_radius(&dense(a), 1e-12).unwrap().0
}

/// `a` rescaled to spectral radius `target`.
pub fn with_rho(a: &SparseMatrix, target: f64) -> SparseMatrix {
    a.scaled(target / rho(a))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DenseVector {
    DenseVector::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_positive(rng: &mut ChaCha8Rng, n: usize) -> DenseVector {
    DenseVector::new((0..n).map(|_| rng.gen_range(0.1..1.0)).collect()).unwrap()
}

/// Dense `(sI − A)⁻¹`.
pub fn m_inverse(a: &SparseMatrix, s: f64) -> DenseMatrix {
    dense_inverse(&dense(a).shifted(s, -1.0)).unwrap()
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn rel_err(x: &[f64], reference: &[f64]) -> f64 {
    norm2(&sub(x, reference)) / norm2(reference)
}

/// `max_i x_i / min_i x_i`.
pub fn condition(x: &[f64]) -> f64 {
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// Whether the symmetric matrix `b + shift·I` admits a Cholesky factorization.
pub fn is_positive_semidefinite(b: &DenseMatrix, shift: f64) -> bool {
    let n = b.n_rows();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = b.get(j, j) + shift;
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut v = b.get(i, j);
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = v / d;
        }
    }
    true
}
