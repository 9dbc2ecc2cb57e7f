mod common;

use common::*;
use perron_core::apps::{
    graph_kernel, indicator_similarity, katz_centrality, katz_centrality_unchecked, leontief_equilibrium,
    product_graph, top_singular, LabeledGraph,
};
use perron_core::oracle::{dense_inverse, dense_solve, dense_svd_top, DenseMatrix};
use perron_core::{DenseVector, Error, SparseMatrix};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn two_cycle(w: f64) -> SparseMatrix {
    SparseMatrix::from_triplets(2, 2, &[(0, 1, w), (1, 0, w)]).unwrap()
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, labels: u32, density: f64, symmetric: bool) -> LabeledGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if (!symmetric || u < v) && u != v && rng.gen_bool(density) {
                let label = rng.gen_range(1..=labels);
                let w = rng.gen_range(0.2..1.0);
                edges.push((u, v, label, w));
                if symmetric {
                    edges.push((v, u, label, w));
                }
            }
        }
    }
    LabeledGraph::new(n, labels, edges).unwrap()
}

fn uniform(n: usize) -> DenseVector {
    DenseVector::new(vec![1.0 / n as f64; n]).unwrap()
}

#[test]
fn katz_examples() {
    let b = DenseVector::ones(3);
    let (v, _) = katz_centrality(&SparseMatrix::zeros(3, 3), 0.7, &b, 1e-10).unwrap();
    assert_eq!(v, b);

    let (v, _) = katz_centrality(&two_cycle(1.0), 0.5, &DenseVector::ones(2), 1e-12).unwrap();
    assert!((v[0] - 2.0).abs() < 1e-10 && (v[1] - 2.0).abs() < 1e-10);

    assert!(matches!(katz_centrality(&two_cycle(1.0), 1.0, &DenseVector::ones(2), 1e-6), Err(Error::DecayTooLarge)));
}

#[test]
fn katz_on_fifty_nodes_matches_dense_solve() {
    let mut rng = rng(61);
    let a = random_irreducible(&mut rng, 50, 0.08, 1.0, 1.0);
    let alpha = 0.9 / rho(&a);
    let b = random_positive(&mut rng, 50);
    let eps = 1e-10;
    let (v, _) = katz_centrality(&a, alpha, &b, eps).unwrap();
    let (want, _) = dense_solve(&dense(&a).shifted(1.0, -alpha), &b).unwrap();
    let m_inv = dense_inverse(&dense(&a).shifted(1.0, -alpha)).unwrap();
    // residual ≤ eps‖b‖ turns into an error bound through ‖M⁻¹‖
    let bound = eps * norm2(&b) * (m_inv.norm1() * m_inv.norm_inf()).sqrt();
    assert!(norm2(&sub(&v, &want)) <= bound);
    let (u, _) = katz_centrality_unchecked(&a, alpha, &b, eps).unwrap();
    assert!(rel_err(&u, &want) < 1e-8);
}

#[test]
fn leontief_examples() {
    let out = leontief_equilibrium(&two_cycle(0.5), Some(&DenseVector::ones(2)), 1e-12).unwrap();
    assert!(out.verdict);
    let x = out.x.unwrap();
    assert!((x[0] - 2.0).abs() < 1e-10 && (x[1] - 2.0).abs() < 1e-10);

    let out = leontief_equilibrium(&two_cycle(2.0), Some(&DenseVector::ones(2)), 1e-12).unwrap();
    assert!(!out.verdict && out.x.is_none() && out.witness.is_some());

    let mut rng = rng(62);
    let a = with_rho(&random_irreducible(&mut rng, 30, 0.2, 1e-2, 1.0), 0.8);
    let d = random_positive(&mut rng, 30);
    let out = leontief_equilibrium(&a, Some(&d), 1e-12).unwrap();
    let (want, _) = dense_solve(&dense(&a).shifted(1.0, -1.0), &d).unwrap();
    assert!(rel_err(&out.x.unwrap(), &want) < 1e-9);

    let reducible = SparseMatrix::from_triplets(2, 2, &[(0, 1, 0.5)]).unwrap();
    assert!(matches!(leontief_equilibrium(&reducible, None, 1e-6), Err(Error::NotIrreducible)));
}

#[test]
fn singular_examples() {
    let golden = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)]).unwrap();
    let t = top_singular(&golden, 1e-8).unwrap();
    let want = ((3.0 + 5f64.sqrt()) / 2.0).sqrt();
    assert!((t.sigma - want).abs() <= 1e-7 * want);
    assert!((norm2(&t.left) - 1.0).abs() < 1e-12 && (norm2(&t.right) - 1.0).abs() < 1e-12);

    let mut rng = rng(63);
    let mut triplets = Vec::new();
    for i in 0..30 {
        triplets.push((i, i, rng.gen_range(0.5..1.0)));
        for j in 0..30 {
            if rng.gen_bool(0.15) {
                triplets.push((i, j, rng.gen_range(0.0..1.0)));
            }
        }
    }
    let a = SparseMatrix::from_triplets(30, 30, &triplets).unwrap();
    let delta = 1e-6;
    let t = top_singular(&a, delta).unwrap();
    let oracle = dense_svd_top(&dense(&a), 1e-14).unwrap();
    assert!((t.sigma - oracle.sigma).abs() <= delta * oracle.sigma);
}

#[test]
fn product_graph_against_brute_force() {
    let mut rng = rng(64);
    for _ in 0..10 {
        let g = random_graph(&mut rng, 5, 3, 0.4, false);
        let h = random_graph(&mut rng, 5, 3, 0.4, false);
        let w = product_graph(&g, &h, indicator_similarity).unwrap();
        let mut want = DenseMatrix::zeros(25, 25);
        for &(u, x, lg, wg) in g.edges() {
            for &(v, z, lh, wh) in h.edges() {
                if lg == lh {
                    let (i, j) = (w.index(u, v), w.index(x, z));
                    want.set(i, j, want.get(i, j) + wg * wh);
                }
            }
        }
        assert_eq!(dense(&w.matrix), want);
        let pairs = g
            .edges()
            .iter()
            .flat_map(|eg| h.edges().iter().map(move |eh| (eg, eh)))
            .filter(|(eg, eh)| eg.2 == eh.2)
            .map(|(eg, eh)| (w.index(eg.0, eh.0), w.index(eg.1, eh.1)))
            .collect::<std::collections::BTreeSet<_>>();
        assert_eq!(w.matrix.nnz(), pairs.len());
    }
}

#[test]
fn kernel_examples() {
    let g = LabeledGraph::new(2, 1, vec![(0, 1, 1, 1.0), (1, 0, 1, 1.0)]).unwrap();
    let h = LabeledGraph::new(1, 1, vec![]).unwrap();
    let w = product_graph(&g, &h, indicator_similarity).unwrap();
    assert_eq!(w.matrix.nnz(), 0);

    let mut rng = rng(65);
    let g = random_graph(&mut rng, 6, 2, 0.4, false);
    let h = random_graph(&mut rng, 6, 2, 0.4, false);
    let w = product_graph(&g, &h, indicator_similarity).unwrap();
    let n = 36;
    let p = uniform(n);
    let q = DenseVector::new((0..n).map(|i| (i + 1) as f64).collect::<Vec<_>>()).unwrap();
    let q = DenseVector::new(q.iter().map(|v| v / q.norm1()).collect()).unwrap();
    let rho_w = spectral_radius_any(&w.matrix);
    if rho_w > 0.0 {
        let lambda = 0.5 / rho_w;
        let k = graph_kernel(&w, &p, &q, lambda, 1e-12).unwrap();
        let inv = dense_inverse(&dense(&w.matrix).shifted(1.0, -lambda)).unwrap();
        let want: f64 = q.iter().zip(inv.matvec(&p)).map(|(a, b)| a * b).sum();
        assert!((k.value - want).abs() <= 1e-8 * want.abs().max(1.0));
        assert!((k.value - want).abs() <= k.error_bound + 1e-15);
    }
}

/// Spectral radius of a possibly reducible nonnegative matrix, by components.
fn spectral_radius_any(a: &SparseMatrix) -> f64 {
    a.strongly_connected_components()
        .into_iter()
        .map(|c| {
            let b = a.principal_submatrix(&c);
            if c.len() == 1 {
                b.get(0, 0)
            } else {
                rho(&b)
            }
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn katz_matches_truncated_series(seed in 0u64..1_000_000, frac in 0.05f64..0.5) {
        let mut rng = rng(seed);
        let n = rng.gen_range(2..=20);
        let a = random_irreducible(&mut rng, n, 0.3, 1e-2, 1.0);
        let alpha = frac / a.induced_norms().norm_inf;
        let b = random_positive(&mut rng, n);
        let (v, _) = katz_centrality(&a, alpha, &b, 1e-13).unwrap();
        let d = dense(&a);
        let mut term = b.to_vec();
        let mut sum = term.clone();
        for _ in 0..60 {
            term = d.matvec(&term).iter().map(|x| alpha * x).collect();
            for (s, t) in sum.iter_mut().zip(&term) {
                *s += t;
            }
        }
        prop_assert!(rel_err(&v, &sum) <= 1e-8);
    }

    #[test]
    fn leontief_verdict_matches_spectral_radius(seed in 0u64..1_000_000, target in 0.3f64..1.7) {
        prop_assume!((target - 1.0).abs() > 1e-3);
        let mut rng = rng(seed);
        let n = rng.gen_range(2..=25);
        let a = with_rho(&random_irreducible(&mut rng, n, 0.2, 1e-2, 1.0), target);
        let r = rho(&a);
        let out = leontief_equilibrium(&a, None, 1e-8).unwrap();
        prop_assert_eq!(out.verdict, r < 1.0);
    }

    #[test]
    fn singular_value_is_rayleigh_consistent(seed in 0u64..1_000_000, delta_idx in 0usize..2) {
        let delta = [1e-3, 1e-6][delta_idx];
        let mut rng = rng(seed);
        let rows = rng.gen_range(2..=15);
        let cols = rng.gen_range(2..=15);
        let mut t = Vec::new();
        for i in 0..rows.min(cols) {
            t.push((i, i, rng.gen_range(0.5..1.0)));
        }
        for i in 0..rows {
            t.push((i, rng.gen_range(0..cols), rng.gen_range(0.1..1.0)));
        }
        for j in 0..cols {
            t.push((rng.gen_range(0..rows), j, rng.gen_range(0.1..1.0)));
            t.push((0, j, rng.gen_range(0.1..1.0)));
        }
        let a = SparseMatrix::from_triplets(rows, cols, &t).unwrap();
        let s = top_singular(&a, delta).unwrap();
        prop_assert!(s.sigma > 0.0);
        prop_assert!((norm2(&s.right) - 1.0).abs() < 1e-12 && (norm2(&s.left) - 1.0).abs() < 1e-12);
        let ar = a.matvec(&s.right, false).unwrap();
        let rayleigh = norm2(&ar).powi(2);
        let sigma2 = s.sigma * s.sigma;
        prop_assert!((sigma2 - rayleigh).abs() <= 2.0 * delta * sigma2, "{} vs {}", sigma2, rayleigh);
    }

    #[test]
    fn symmetric_kernel_dominates_self_inner_product(seed in 0u64..1_000_000, frac in 0.05f64..0.9) {
        let mut rng = rng(seed);
        let g = random_graph(&mut rng, 5, 2, 0.5, true);
        let h = random_graph(&mut rng, 4, 2, 0.5, true);
        let w = product_graph(&g, &h, indicator_similarity).unwrap();
        prop_assert!(w.matrix.is_symmetric(0.0));
        let n = w.matrix.n_rows();
        let raw = random_positive(&mut rng, n);
        let p = DenseVector::new(raw.iter().map(|v| v / raw.norm1()).collect()).unwrap();
        let r = spectral_radius_any(&w.matrix);
        let lambda = if r > 0.0 { frac / r } else { frac };
        let k = graph_kernel(&w, &p, &p, lambda, 1e-12).unwrap();
        prop_assert!(k.value >= norm2(&p).powi(2) * (1.0 - 1e-12));
    }

    #[test]
    fn product_nnz_counts_matching_edge_pairs(seed in 0u64..1_000_000) {
        let mut rng = rng(seed);
        // no parallel edges, so each label-matching edge pair is its own entry
        let g = random_graph(&mut rng, 5, 3, 0.4, false);
        let h = random_graph(&mut rng, 5, 3, 0.4, false);
        let w = product_graph(&g, &h, indicator_similarity).unwrap();
        let mut count = 0;
        for label in 1..=3 {
            let eg = g.edges().iter().filter(|e| e.2 == label).count();
            let eh = h.edges().iter().filter(|e| e.2 == label).count();
            count += eg * eh;
        }
        prop_assert_eq!(w.matrix.nnz(), count);
    }
}

#[test]
fn kernel_rejects_divergent_decay() {
    let w = product_graph(
        &LabeledGraph::new(2, 1, vec![(0, 1, 1, 1.0), (1, 0, 1, 1.0)]).unwrap(),
        &LabeledGraph::new(2, 1, vec![(0, 1, 1, 1.0), (1, 0, 1, 1.0)]).unwrap(),
        indicator_similarity,
    )
    .unwrap();
    let p = uniform(4);
    assert!(matches!(graph_kernel(&w, &p, &p, 1.5, 1e-8), Err(Error::KernelDiverges)));
    let bad = DenseVector::new(vec![0.5, 0.5, 0.5, 0.5]).unwrap();
    assert!(graph_kernel(&w, &bad, &p, 0.1, 1e-8).is_err());
}
