//! Property tests for the algebraic invariants.

use proptest::prelude::*;
use qestlab_core::collisional::{likelihood, CollisionalParams, ProbePrep};
use qestlab_core::qcore::{
    bloch_ket, fidelity, matrix_exponential, partial_trace_mat, tensor_product, unvectorize,
    vectorize, CMat, DensityMatrix,
};
use qestlab_core::stats::{beta_update, BetaParams};
use qestlab_core::C64;

type M = CMat<f64>;

fn mat_strategy(n: usize) -> impl Strategy<Value = M> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
        M::from_fn(n, n, |i, j| {
            let (re, im) = v[i * n + j];
            C64::new(re, im)
        })
    })
}

fn qubit_state_strategy() -> impl Strategy<Value = DensityMatrix<f64>> {
    (0.0f64..std::f64::consts::PI, 0.0f64..6.28, 0.0f64..1.0).prop_map(|(a, p, mix)| {
        let mut m = bloch_ket(a, p).outer().scale_real(1.0 - mix);
        m.axpy(C64::new(mix / 2.0, 0.0), &M::identity(2));
        DensityMatrix::new(m).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn vectorize_round_trip(m in mat_strategy(3)) {
        let v = vectorize(&m);
        let back = unvectorize(&v, 3, 3).unwrap();
        prop_assert!(back.max_abs_diff(&m) == 0.0);
    }

    #[test]
    fn vec_of_product((a, b, c) in (mat_strategy(2), mat_strategy(2), mat_strategy(2))) {
        let lhs = vectorize(&(&(&a * &b) * &c));
        let rhs = &tensor_product(&c.transpose(), &a) * &vectorize(&b);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn fidelity_symmetric_and_definite((r, s) in (qubit_state_strategy(), qubit_state_strategy())) {
        let f_rs = fidelity(&r, &s).unwrap();
        let f_sr = fidelity(&s, &r).unwrap();
        prop_assert!((f_rs - f_sr).abs() < 1e-8);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f_rs));
        prop_assert!((fidelity(&r, &r).unwrap() - 1.0).abs() < 1e-10);
        if r.as_mat().max_abs_diff(s.as_mat()) > 1e-4 {
            prop_assert!(f_rs < 1.0 - 1e-10);
        }
    }

    #[test]
    fn anti_hermitian_exponentials_are_unitary(m in mat_strategy(3)) {
        let h = m.hermitize();
        let u = matrix_exponential(&h.scale(C64::new(0.0, -1.0))).unwrap();
        let prod = &u.adjoint() * &u;
        prop_assert!(prod.max_abs_diff(&M::identity(3)) < 1e-10);
    }

    #[test]
    fn partial_trace_preserves_trace((r, s) in (qubit_state_strategy(), qubit_state_strategy())) {
        let joint = tensor_product(r.as_mat(), s.as_mat());
        for keep in [[0usize], [1usize]] {
            let red = partial_trace_mat(&joint, &[2, 2], &keep).unwrap();
            prop_assert!((red.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_updates_commute_with_batching(
        (k1, e1, k2, e2) in (0usize..20, 0usize..20, 0usize..20, 0usize..20)
    ) {
        let prior = BetaParams::new(1.3f64, 0.7).unwrap();
        let a = beta_update(beta_update(prior, k1, k1 + e1).unwrap(), k2, k2 + e2).unwrap();
        let b = beta_update(prior, k1 + k2, k1 + e1 + k2 + e2).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn collisional_likelihood_is_normalized(
        (t, gts, gsa_frac) in (0.1f64..5.0, 0.05f64..2.0, 0.05f64..1.0)
    ) {
        let p = CollisionalParams::new(
            1.0,
            gts,
            gsa_frac * std::f64::consts::FRAC_PI_2,
            ProbePrep::Ground,
        )
        .unwrap();
        let p0 = likelihood(0, t, &p).unwrap();
        let p1 = likelihood(1, t, &p).unwrap();
        prop_assert!((p0 + p1 - 1.0).abs() < 1e-12);
        prop_assert!(p1 >= 0.0 && p1 <= 1.0);
    }
}
