use autoconv_core::{
    autoconvolve, make_profile, objective, objective_bruteforce, project_to_simplex, step_sup, window_set,
    CoefficientProfile, RangeMode, WindowIndex,
};
use proptest::prelude::*;

fn profile() -> impl Strategy<Value = CoefficientProfile> {
    (1usize..=5).prop_flat_map(|n| {
        prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0f64..10.0], 2 * n)
            .prop_filter("positive mass", |v| v.iter().sum::<f64>() > 1e-6)
            .prop_map(move |v| make_profile(n, v, true).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn fast_objective_matches_pair_loops(p in profile()) {
        for mode in [RangeMode::Proof, RangeMode::Theorem] {
            let fast = objective(&p, mode).value;
            let slow = objective_bruteforce(&p, mode);
            prop_assert!((fast - slow).abs() <= 1e-12 * slow.max(1.0));
        }
    }

    #[test]
    fn proof_range_never_drops_below_one(p in profile()) {
        prop_assert!(objective(&p, RangeMode::Proof).value >= 1.0 - 1e-12);
    }

    #[test]
    fn argmax_windows_attain_the_value(p in profile()) {
        let e = objective(&p, RangeMode::Proof);
        let s = autoconvolve(&p);
        prop_assert!(!e.argmax.is_empty());
        for w in &e.argmax {
            let v = autoconv_core::window_value(&s, *w).unwrap();
            prop_assert!((v - e.value).abs() <= 1e-12 * e.value);
        }
    }

    #[test]
    fn step_sup_dominates(p in profile()) {
        prop_assert!(step_sup(&p).unwrap() >= objective(&p, RangeMode::Proof).value * (1.0 - 1e-12));
    }

    #[test]
    fn projection_is_feasible_and_idempotent(
        v in (1usize..=5).prop_flat_map(|n| prop::collection::vec(-10.0f64..10.0, 2 * n))
    ) {
        let n = v.len() / 2;
        let p = project_to_simplex(n, &v).unwrap();
        prop_assert!(p.coeffs().iter().all(|&x| x >= 0.0));
        prop_assert!((p.total() - 4.0 * n as f64).abs() <= 1e-9);
        let q = project_to_simplex(n, p.coeffs()).unwrap();
        for (a, b) in p.coeffs().iter().zip(q.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn out_of_range_windows_are_rejected(n in 1usize..=4, k in -20i64..20, ell in -2i64..20) {
        let p = make_profile(n, vec![2.0; 2 * n], false).unwrap();
        let s = autoconvolve(&p);
        let w = WindowIndex::new(k, ell);
        let valid = window_set(n, RangeMode::Proof).contains(&w);
        prop_assert_eq!(autoconv_core::window_value(&s, w).is_ok(), valid);
    }
}
