mod common;

use common::{gaussian_matrix, gaussian_vector, low_rank, orthogonal, rel_diff};
use lqshrink::frames::{BiFrame, ForwardProblem, Frame};
use lqshrink::prox::DecoupledProblem;
use lqshrink::shrinkage::{rho_hs, ShrinkageRule};
use lqshrink::variational::{denoising, eval_kq, sparse_approximation, SparseVariant, Variant, VariationalProblem, Weights};
use lqshrink::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn orthonormal_biframe(n: usize, seed: u64) -> BiFrame {
    let q = orthogonal(n, seed);
    BiFrame::new(Frame::new(q.clone()).unwrap(), Frame::new(q).unwrap()).unwrap()
}

fn positive_weights(n: usize, seed: u64) -> Weights {
    let v: Vec<f64> = gaussian_vector(n, seed).iter().map(|z| 0.05 + z.abs()).collect();
    let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
    Weights::new(v, lo, hi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn denoising_objective_decouples(n in 1usize..10, seed in any::<u64>(), q in 0.0f64..=1.0) {
        let bf = orthonormal_biframe(n, seed);
        let h = gaussian_vector(n, seed ^ 1);
        let w = positive_weights(n, seed ^ 2);
        let p = VariationalProblem::new(denoising(h.clone()).unwrap(), bf.clone(), w.clone(), q).unwrap();
        // no exact zeros: F̃^T F ω reproduces them only up to rounding, which |·|^q amplifies
        let omega = gaussian_vector(n, seed ^ 3);
        let j = p.eval_jq(&bf.synthesize(&omega)).unwrap().total;
        let v: Vec<f64> = bf.analyze(&h).iter().copied().collect();
        let i = DecoupledProblem::new(v, w.values().to_vec(), q).unwrap().objective(omega.as_slice()).unwrap();
        prop_assert!(rel_diff(j, i) <= 1e-12, "{j} vs {i}");
    }

    #[test]
    fn standard_basis_objective_decouples_with_zeros(n in 1usize..10, seed in any::<u64>(), q in 0.0f64..=1.0, zeros in prop::collection::vec(any::<bool>(), 10)) {
        let bf = BiFrame::orthonormal(n);
        let h = gaussian_vector(n, seed ^ 1);
        let w = positive_weights(n, seed ^ 2);
        let p = VariationalProblem::new(denoising(h.clone()).unwrap(), bf.clone(), w.clone(), q).unwrap();
        let omega = DVector::from_fn(n, |i, _| if zeros[i] { 0.0 } else { 1.0 + i as f64 });
        let j = p.eval_jq(&bf.synthesize(&omega)).unwrap().total;
        let i = DecoupledProblem::new(h.iter().copied().collect(), w.values().to_vec(), q).unwrap().objective(omega.as_slice()).unwrap();
        prop_assert!(rel_diff(j, i) <= 1e-12, "{j} vs {i}");
    }

    #[test]
    fn pulled_back_minimizer_has_same_image(rows in 2usize..8, cols in 2usize..8, rank in 1usize..8, extra in 0usize..5, seed in any::<u64>(), q in 0.0f64..=1.0) {
        let r = rank.min(rows).min(cols);
        let l = low_rank(rows, cols, r, seed);
        let h = &l * gaussian_vector(cols, seed ^ 1);
        let bf = BiFrame::canonical(Frame::new(gaussian_matrix(cols, cols + extra, seed ^ 2)).unwrap()).unwrap();
        let w = Weights::uniform(cols + extra, 0.3).unwrap();
        let p = VariationalProblem::new(ForwardProblem::new(l.clone(), h).unwrap(), bf.clone(), w, q).unwrap();
        let m = p.shrinkage_minimizer(&rho_hs(q).unwrap(), Variant::PulledBack).unwrap();
        let direct = bf.synthesize(&m.coefficients);
        prop_assert!((&l * &m.g - &l * direct).amax() <= 1e-8 * l.amax().max(1.0) * m.coefficients.amax().max(1.0));
    }

    #[test]
    fn variants_agree_for_injective_operator_and_basis(n in 1usize..7, extra_rows in 0usize..4, seed in any::<u64>(), q in 0.0f64..=1.0) {
        let l = gaussian_matrix(n + extra_rows, n, seed);
        let h = &l * gaussian_vector(n, seed ^ 1);
        let f = gaussian_matrix(n, n, seed ^ 2) + DMatrix::identity(n, n) * 3.0;
        let bf = BiFrame::canonical(Frame::new(f).unwrap()).unwrap();
        let p = VariationalProblem::new(ForwardProblem::new(l, h).unwrap(), bf, Weights::uniform(n, 0.2).unwrap(), q).unwrap();
        let rule = rho_hs(q).unwrap();
        let a = p.shrinkage_minimizer(&rule, Variant::PulledBack).unwrap().g;
        let b = p.shrinkage_minimizer(&rule, Variant::Direct).unwrap().g;
        prop_assert!((&a - &b).norm() <= 1e-9 * b.norm().max(1.0));
        let (ja, jb) = (p.eval_jq(&a).unwrap(), p.eval_jq(&b).unwrap());
        prop_assert!((ja.residual_sq - jb.residual_sq).abs() <= 1e-9 * jb.total.max(1.0));
    }

    #[test]
    fn projected_sparse_approximation_is_in_range_of_analysis(d in 1usize..6, extra in 0usize..6, seed in any::<u64>(), q in 0.0f64..=1.0) {
        let bf = BiFrame::canonical(Frame::new(gaussian_matrix(d, d + extra, seed)).unwrap()).unwrap();
        let h = gaussian_vector(d, seed ^ 1);
        let w = Weights::uniform(d + extra, 0.4).unwrap();
        let s = sparse_approximation(&bf, &h, &w, q, &rho_hs(q).unwrap(), SparseVariant::Projected).unwrap();
        let again = bf.analyze(&bf.synthesize(&s.omega));
        prop_assert!((again - &s.omega).amax() <= 1e-9 * s.omega.amax().max(1.0));
        let k = eval_kq(&bf, &h, &w, q, &s.omega).unwrap();
        prop_assert_eq!(k, s.objective);
    }
}

#[test]
fn variants_give_equal_objective_for_continuous_penalty() {
    // for q < 1 rounding noise in zero coefficients is amplified by |·|^q
    for seed in 0..20 {
        let l = gaussian_matrix(6, 4, seed);
        let h = &l * gaussian_vector(4, seed + 100);
        let bf = BiFrame::canonical(Frame::new(gaussian_matrix(4, 4, seed + 200) + DMatrix::identity(4, 4) * 3.0).unwrap()).unwrap();
        let p = VariationalProblem::new(ForwardProblem::new(l, h).unwrap(), bf, Weights::uniform(4, 0.2).unwrap(), 1.0).unwrap();
        let rule = ShrinkageRule::soft();
        let a = p.eval_jq(&p.shrinkage_minimizer(&rule, Variant::PulledBack).unwrap().g).unwrap().total;
        let b = p.eval_jq(&p.shrinkage_minimizer(&rule, Variant::Direct).unwrap().g).unwrap().total;
        assert!(rel_diff(a, b) <= 1e-9, "seed {seed}: {a} vs {b}");
    }
}

#[test]
fn data_outside_range_is_rejected() {
    let l = low_rank(5, 3, 1, 7);
    let h = gaussian_vector(5, 8);
    let p = VariationalProblem::new(ForwardProblem::new(l, h).unwrap(), BiFrame::orthonormal(3), Weights::uniform(3, 1.0).unwrap(), 0.5).unwrap();
    assert!(matches!(p.shrinkage_minimizer(&rho_hs(0.5).unwrap(), Variant::Direct), Err(Error::OutOfRange(_))));
}

#[test]
fn smooth_rule_below_its_exponent_is_rejected() {
    let p = VariationalProblem::new(denoising(DVector::from_vec(vec![1.0, 2.0])).unwrap(), BiFrame::orthonormal(2), Weights::uniform(2, 1.0).unwrap(), 0.3).unwrap();
    let err = p.shrinkage_minimizer(&ShrinkageRule::diffusion1(), Variant::Direct).unwrap_err();
    assert!(matches!(err, Error::HypothesisViolated { .. }), "{err}");
}

#[test]
fn weights_outside_declared_bounds_are_rejected() {
    assert!(Weights::new(vec![0.5, 2.0], 0.5, 1.0).is_err());
    assert!(Weights::new(vec![0.5], 1.0, 0.5).is_err());
    assert!(Weights::new(vec![0.5], -1.0, 0.5).is_err());
}
