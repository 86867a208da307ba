use naimark_core::applications::merge::{merge_halfsum, validate_povm};
use naimark_core::bridge::{
    joint_distribution, sample_outcomes, unregularize_probabilities, QuantumState,
};
use naimark_core::dilation::{build_dilation, trace_product, DilatedOperator, RegularizedPovm};
use naimark_core::fixtures::*;
use naimark_core::model::{component, ModelBasis};
use naimark_core::operator::{
    c, frobenius_distance, frobenius_norm, identity, tensor, w_adjoint, w_inner,
};
use naimark_core::{CVector, GramMetric};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn coefficient() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| c(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn regularization_keeps_identity_sum(seed in any::<u64>(), m in 2usize..=4, k in 2usize..=6) {
        let family = random_completed_family(&mut rng(seed), m, k);
        let p = RegularizedPovm::prepare(&family, 0.5).unwrap();
        let sum = p.elements().iter().fold(naimark_core::operator::zeros(m), |acc, b| acc + b.matrix());
        prop_assert!(frobenius_distance(&sum, &identity(m)) <= 1e-12);
        for b in p.elements() {
            prop_assert!(b.spectrum().unwrap().min() > 0.0);
        }
    }

    #[test]
    fn w_adjoint_is_an_involution(seed in any::<u64>(), m in 2usize..=3, k in 2usize..=4) {
        let mut r = rng(seed);
        let p = random_regularized(&mut r, m, k);
        let blocks: Vec<_> = p.elements().iter().map(|b| b.matrix().clone()).collect();
        let g = GramMetric::block_diagonal(&blocks).unwrap();
        let x = random_matrix(&mut r, m * k);
        let twice = w_adjoint(&w_adjoint(&x, &g).unwrap(), &g).unwrap();
        prop_assert!(frobenius_distance(&twice, &x) <= 1e-9 * (1.0 + frobenius_norm(&x)) * g.condition());
    }

    #[test]
    fn w_adjoint_pairs_inner_products(seed in any::<u64>(), m in 2usize..=3, k in 2usize..=4) {
        let mut r = rng(seed);
        let p = random_regularized(&mut r, m, k);
        let d = build_dilation(&p).unwrap();
        let n = d.n();
        let a = random_matrix(&mut r, n);
        let x: CVector = naimark_core::dilation::random_vector(&mut r, n);
        let y: CVector = naimark_core::dilation::random_vector(&mut r, n);
        let lhs = w_inner(&x, &a.dot(&y), d.metric()).unwrap();
        let adj = w_adjoint(&a, d.metric()).unwrap();
        let rhs = w_inner(&adj.dot(&x), &y, d.metric()).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + lhs.norm()));
    }

    #[test]
    fn w_inner_is_positive(seed in any::<u64>(), m in 2usize..=4, k in 2usize..=5) {
        let mut r = rng(seed);
        let p = random_regularized(&mut r, m, k);
        let d = build_dilation(&p).unwrap();
        let x = naimark_core::dilation::random_vector(&mut r, d.n());
        let v = w_inner(&x, &x, d.metric()).unwrap();
        prop_assert!(v.re > 0.0);
        prop_assert!(v.im.abs() <= 1e-12 * v.re);
    }

    #[test]
    fn tensor_is_associative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, cm) = (random_matrix(&mut r, 2), random_matrix(&mut r, 3), random_matrix(&mut r, 2));
        let left = tensor(&tensor(&a, &b), &cm);
        let right = tensor(&a, &tensor(&b, &cm));
        prop_assert!(frobenius_distance(&left, &right) <= 1e-14);
    }

    #[test]
    fn naimark_product_is_pointwise(
        seed in any::<u64>(),
        a in proptest::collection::vec(coefficient(), 3),
        b in proptest::collection::vec(coefficient(), 3),
    ) {
        let p = random_regularized(&mut rng(seed), 2, 3);
        let d = build_dilation(&p).unwrap();
        let u = d.naimark_element(a.clone()).unwrap();
        let v = d.naimark_element(b.clone()).unwrap();
        let product = u.product(&v);
        let expected: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        prop_assert_eq!(product.coefficients().unwrap(), &expected[..]);
        prop_assert!(frobenius_distance(product.matrix(), &u.matrix().dot(v.matrix())) <= 1e-12);
        let direct = DilatedOperator::naimark(2, expected);
        prop_assert!(frobenius_distance(direct.matrix(), product.matrix()) <= 1e-12);
    }

    #[test]
    fn component_is_linear(
        seed in any::<u64>(),
        alpha in coefficient(),
        beta in coefficient(),
    ) {
        let mut r = rng(seed);
        let p = random_regularized(&mut r, 2, 4);
        let d = build_dilation(&p).unwrap();
        let mb = ModelBasis::new(&d).unwrap();
        let x = random_matrix(&mut r, d.n());
        let y = random_matrix(&mut r, d.n());
        let combined = x.mapv(|z| z * alpha) + y.mapv(|z| z * beta);
        let lhs = component(&combined, &mb).unwrap();
        let rhs = component(&x, &mb).unwrap().mapv(|z| z * alpha)
            + component(&y, &mb).unwrap().mapv(|z| z * beta);
        prop_assert!(frobenius_distance(&lhs, &rhs) <= 1e-9 * (1.0 + frobenius_norm(&lhs)));
    }

    #[test]
    fn unregularize_inverts_the_shift(seed in any::<u64>(), m in 2usize..=3, k in 2usize..=5) {
        let mut r = rng(seed);
        let family = random_completed_family(&mut r, m, k);
        let p = RegularizedPovm::prepare(&family, 0.5).unwrap();
        let d = build_dilation(&p).unwrap();
        let state = QuantumState::new(random_state(&mut r, m)).unwrap();
        let q = unregularize_probabilities(&joint_distribution(&state, &d).unwrap(), &p).unwrap();
        prop_assert!((q.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        for (qi, b) in q.iter().zip(&family) {
            prop_assert!((qi - trace_product(state.rho().matrix(), b.matrix()).re).abs() <= 1e-10);
        }
    }

    #[test]
    fn samples_sum_to_n(seed in any::<u64>(), n in 0u64..2000) {
        let p = RegularizedPovm::prepare(&tetrahedral_povm(), 0.5).unwrap();
        let d = build_dilation(&p).unwrap();
        let state = QuantumState::new(random_state(&mut rng(seed), 2)).unwrap();
        let jd = joint_distribution(&state, &d).unwrap();
        let counts = sample_outcomes(&jd, n, seed);
        prop_assert_eq!(counts.iter().sum::<u64>(), n);
        prop_assert_eq!(counts, sample_outcomes(&jd, n, seed));
    }

    #[test]
    fn halfsum_is_closed(seed in any::<u64>(), m in 2usize..=4, kp in 1usize..=4, kq in 1usize..=4) {
        let mut r = rng(seed);
        let p = random_povm(&mut r, m, kp);
        let q = random_povm(&mut r, m, kq);
        let merged = merge_halfsum(&p, &q, 1e-9).unwrap();
        prop_assert_eq!(merged.len(), kp + kq);
        prop_assert!(validate_povm(&merged, 2e-9).is_ok());
    }
}
