mod common;

use common::*;
use perron_core::oracle::{dense_inverse, dense_spectral_radius};
use perron_core::perron::{
    collatz_wielandt_bounds, compute_perron, find_perron_value, m_decide, relative_residual, simple_perron, Verdict,
};
use perron_core::{DenseVector, Error, SparseMatrix};
use proptest::prelude::*;
use rand::Rng;

fn two_cycle(w: f64) -> SparseMatrix {
    SparseMatrix::from_triplets(2, 2, &[(0, 1, w), (1, 0, w)]).unwrap()
}

/// Directed cycle `i → i+1` with weights geometrically spread over `[lo, 1]`.
fn chain(n: usize, lo: f64) -> SparseMatrix {
    let t: Vec<(usize, usize, f64)> = (0..n)
        .map(|i| (i, (i + 1) % n, lo.powf(i as f64 / (n - 1) as f64)))
        .chain((0..n).map(|i| ((i + 1) % n, i, lo.powf(1.0 - i as f64 / (n - 1) as f64))))
        .collect();
    SparseMatrix::from_triplets(n, n, &t).unwrap()
}

#[test]
fn decision_examples() {
    let yes = m_decide(&two_cycle(0.5), 0.1, 10.0).unwrap();
    assert_eq!(yes.verdict, Verdict::IsMMatrixShifted);
    let pair = yes.scaling.unwrap();
    let shifted = two_cycle(0.5).identity_combination(1.1, -1.0).unwrap();
    assert!(shifted.apply_scaling(&pair.left, &pair.right).unwrap().check_rcdd(1e-12));

    let no = m_decide(&two_cycle(2.0), 0.1, 10.0).unwrap();
    assert_eq!(no.verdict, Verdict::NotMMatrix);
    assert!(no.witness.is_some() && no.scaling.is_none());

    let boundary = m_decide(&two_cycle(1.0), 0.1, 10.0).unwrap();
    assert_eq!(boundary.verdict, Verdict::NotMMatrix);
}

#[test]
fn decision_requires_irreducible() {
    let a = SparseMatrix::from_triplets(2, 2, &[(0, 1, 0.5)]).unwrap();
    assert!(matches!(m_decide(&a, 0.1, 10.0), Err(Error::NotIrreducible)));
}

#[test]
fn bisection_examples() {
    let one = SparseMatrix::from_triplets(1, 1, &[(0, 0, 2.0)]).unwrap();
    let (s, _) = find_perron_value(&one, 0.0, 2.0, 0.1, 1.0).unwrap();
    assert!((2.0..2.2).contains(&s), "{s}");

    let (s, _) = find_perron_value(&two_cycle(1.0), 0.0, 1.0, 0.05, 2.0).unwrap();
    assert!((1.0..1.05).contains(&s), "{s}");

    let mut rng = rng(41);
    let a = random_irreducible(&mut rng, 20, 0.2, 1e-2, 1.0);
    let r = rho(&a);
    let d = dense(&a);
    let (_, vr) = dense_spectral_radius(&d, 1e-12).unwrap();
    let (_, vl) = dense_spectral_radius(&d.transpose(), 1e-12).unwrap();
    let k = condition(&vr) + condition(&vl);
    let eps = 0.01;
    let (s, _) = find_perron_value(&a, 0.0, a.induced_norms().norm_inf, eps, k).unwrap();
    assert!(s >= r * (1.0 - 1e-12) && s < (1.0 + eps) * r, "{s} vs {r}");
}

#[test]
fn simple_perron_examples() {
    let c = simple_perron(&two_cycle(1.0), 0.01, 2.0).unwrap();
    assert!((1.0..1.01).contains(&c.s));
    assert!((c.right[0] - c.right[1]).abs() <= 0.01 * 8.0);

    let ones = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let c = simple_perron(&ones, 0.01, 2.0).unwrap();
    assert!((c.s - 2.0).abs() < 0.03);

    let mut rng = rng(42);
    let a = random_irreducible(&mut rng, 30, 0.2, 1e-2, 1.0);
    let d = dense(&a);
    let (_, vr) = dense_spectral_radius(&d, 1e-12).unwrap();
    let (_, vl) = dense_spectral_radius(&d.transpose(), 1e-12).unwrap();
    let eps = 1e-3;
    let c = simple_perron(&a, eps, condition(&vr) + condition(&vl)).unwrap();
    assert!(c.right.iter().all(|&v| v > 0.0));
    assert!(relative_residual(&a, c.s, &c.right, false) <= 8.0 * eps);
    assert!(relative_residual(&a, c.s, &c.left, true) <= 8.0 * eps);
}

#[test]
fn simple_perron_eps_range() {
    assert!(simple_perron(&two_cycle(1.0), 0.3, 1.0).is_err());
    assert!(simple_perron(&two_cycle(1.0), 0.0, 1.0).is_err());
}

#[test]
fn compute_perron_examples() {
    let c = compute_perron(&two_cycle(1.0), 0.1).unwrap();
    assert!(c.s > 0.9 && c.s <= 1.0 + 1e-12);
    assert!((c.right[0] - c.right[1]).abs() < 1e-6);

    let ones = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let c = compute_perron(&ones, 0.05).unwrap();
    assert!((c.s - 2.0).abs() < 0.1);
    assert!(c.cw_lower >= (1.0 - 0.05) * c.s);
}

#[test]
fn ill_conditioned_chain() {
    let a = chain(20, 1e-3);
    let r = rho(&a);
    let well = compute_perron(&chain(20, 0.5), 1e-3).unwrap();
    let c = compute_perron(&a, 1e-3).unwrap();
    assert!(c.k_final > well.k_final, "{} vs {}", c.k_final, well.k_final);
    let (lo, hi) = collatz_wielandt_bounds(&a, &c.right).unwrap();
    assert!(lo <= r * (1.0 + 1e-12) && r <= hi * (1.0 + 1e-12));
    assert!((1.0 - 1e-3) * r < c.s && c.s <= r * (1.0 + 1e-8));
}

#[test]
fn compute_perron_rejects_bad_input() {
    assert!(matches!(compute_perron(&SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0)]).unwrap(), 0.1), Err(Error::NotIrreducible)));
    assert!(compute_perron(&two_cycle(1.0), 1.0).is_err());
    assert!(compute_perron(&two_cycle(-1.0), 0.1).is_err());
}

#[test]
fn collatz_wielandt_examples() {
    let x = DenseVector::ones(2);
    assert_eq!(collatz_wielandt_bounds(&two_cycle(1.0), &x).unwrap(), (1.0, 1.0));
    let a = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![3.0, 1.0]]).unwrap();
    assert_eq!(collatz_wielandt_bounds(&a, &x).unwrap(), (3.0, 4.0));
    let r = 1.0 + 6f64.sqrt();
    assert!(3.0 < r && r < 4.0);
    let (_, v) = dense_spectral_radius(&dense(&a), 1e-14).unwrap();
    let (lo, hi) = collatz_wielandt_bounds(&a, &v).unwrap();
    assert!((lo - r).abs() < 1e-10 && (hi - r).abs() < 1e-10);
    assert!(collatz_wielandt_bounds(&a, &DenseVector::new(vec![1.0, 0.0]).unwrap()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn certificates_are_sound(seed in 0u64..1_000_000, delta_idx in 0usize..3) {
        let delta = [1e-1, 1e-3, 1e-5][delta_idx];
        let mut rng = rng(seed);
        let n = rng.gen_range(2..=40);
        let a = random_irreducible(&mut rng, n, 0.2, 1e-2, 1.0);
        let r = rho(&a);
        let c = compute_perron(&a, delta).unwrap();

        prop_assert!(c.left.iter().all(|&v| v > 0.0) && c.right.iter().all(|&v| v > 0.0));
        prop_assert!(c.cw_lower <= c.cw_upper);
        let (lo, _) = collatz_wielandt_bounds(&a, &c.right).unwrap();
        prop_assert!(lo >= (1.0 - delta) * c.s - 1e-9 * c.s, "cw {} s {}", lo, c.s);
        prop_assert!((1.0 - delta) * r < c.s && c.s <= r * (1.0 + 1e-8), "s {} rho {}", c.s, r);

        let recomputed_r = relative_residual(&a, c.s, &c.right, false);
        let recomputed_l = relative_residual(&a, c.s, &c.left, true);
        prop_assert!((recomputed_r - c.residual_right).abs() <= 1e-12);
        prop_assert!((recomputed_l - c.residual_left).abs() <= 1e-12);
        let bound = delta / (2.0 * c.k_final * c.k_final);
        prop_assert!(c.residual_right <= bound && c.residual_left <= bound);
    }

    #[test]
    fn decisions_agree_with_spectral_radius(seed in 0u64..1_000_000, eps_exp in 1i32..4) {
        let mut rng = rng(seed);
        let n = rng.gen_range(2..=25);
        let a = random_irreducible(&mut rng, n, 0.25, 1e-2, 1.0);
        let d = dense(&a);
        let (r, vr) = dense_spectral_radius(&d, 1e-12).unwrap();
        let (_, vl) = dense_spectral_radius(&d.transpose(), 1e-12).unwrap();
        let eps = 10f64.powi(-eps_exp);
        // generous gamma so the caps never bind
        let gamma = 64.0 * (condition(&vr) + condition(&vl)) / eps;
        let below = m_decide(&a.scaled(1.0 / (1.5 * r)), eps, gamma).unwrap();
        prop_assert_eq!(below.verdict, Verdict::IsMMatrixShifted);
        prop_assert!(below.scaling.is_some());
        let above = m_decide(&a.scaled(1.0 / (0.75 * r)), eps, gamma).unwrap();
        prop_assert_eq!(above.verdict, Verdict::NotMMatrix);
        prop_assert!(above.witness.is_some());
    }

    #[test]
    fn shifted_inverse_bounded_by_eigenvector_condition(seed in 0u64..1_000_000, eps in 1e-4f64..0.5) {
        let mut rng = rng(seed);
        let n = rng.gen_range(2..=15);
        let a = random_irreducible(&mut rng, n, 0.3, 1e-2, 1.0);
        let d = dense(&a);
        let (r, vr) = dense_spectral_radius(&d, 1e-13).unwrap();
        let m = d.shifted(1.0 + eps, -1.0 / r);
        let inv = dense_inverse(&m).unwrap();
        prop_assert!(inv.norm_inf() <= condition(&vr) / eps * (1.0 + 1e-6));
    }

    #[test]
    fn collatz_wielandt_sandwich(seed in 0u64..1_000_000) {
        let mut rng = rng(seed);
        let n = rng.gen_range(2..=20);
        let a = random_irreducible(&mut rng, n, 0.3, 1e-2, 1.0);
        let r = rho(&a);
        let x = random_positive(&mut rng, n);
        let (lo, hi) = collatz_wielandt_bounds(&a, &x).unwrap();
        prop_assert!(lo <= r * (1.0 + 1e-12) && r <= hi * (1.0 + 1e-12));
    }
}
