use afde::closed_forms::{anisotropic_gauge, mass_rescale, partition_min, sandwich_bound, Normalization, VssCalibration};
use afde::grid::{self, Ghost, ScalarField, TensorGrid};
use afde::similarity::{derive_similarity, validate_exponents, MediumExponents, RescaleMap};
use afde::solver::{self, SolverConfig};
use proptest::prelude::*;

/// Exponent sets satisfying both hypotheses in dimensions 1 to 3.
fn exponents() -> impl Strategy<Value = MediumExponents<f64>> {
    (1usize..=3)
        .prop_flat_map(|n| proptest::collection::vec(0.02f64..0.98, n))
        .prop_filter_map("subcritical sum", |m| validate_exponents(m.len(), &m).ok())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

proptest! {
    #[test]
    fn similarity_identities(me in exponents()) {
        let se = derive_similarity(&me);
        let sum: f64 = se.sigma.iter().sum();
        prop_assert!(rel(sum, 1.0) < 1e-12);
        for i in 0..me.dim() {
            prop_assert!(rel(se.alpha * (me.m()[i] - 1.0) + 2.0 * se.a[i], 1.0) < 1e-12);
            prop_assert!(rel(se.sigma[i] - se.gamma[i], 1.0 / (2.0 * se.alpha)) < 1e-12);
            prop_assert!(rel(se.delta[i], 2.0 * se.sigma[i] * se.alpha * se.mu[i] - se.alpha) < 1e-12);
        }
        let gsum: f64 = se.gamma.iter().sum();
        prop_assert!(rel(se.beta, 1.0 - gsum) < 1e-12);
        prop_assert!(se.beta > 0.0 && se.alpha > 0.0);
    }

    #[test]
    fn rescale_round_trip(me in exponents(), t in 0.05f64..50.0, t0 in 0.0f64..3.0, seed in any::<u64>()) {
        // the amplitude (t + t0)^alpha loses about alpha |log(t + t0)| ulps
        let se = derive_similarity(&me);
        prop_assume!(se.alpha * (t + t0).ln().abs() < 40.0);
        let d = me.dim();
        let g = TensorGrid::cube(d, 3.0, if d == 3 { 4 } else { 6 }).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|k| 1.0 + ((seed >> (k % 48)) & 7) as f64).collect();
        let u = ScalarField::new(g, vals, t).unwrap();
        let map = RescaleMap::new(se, t0).unwrap();
        let (v, tau) = map.to_selfsimilar(&u).unwrap();
        prop_assert!((map.t_of(tau) - t).abs() <= 1e-12 * t.max(1.0));
        let (back, t1) = map.from_selfsimilar(&v).unwrap();
        prop_assert!((t1 - t).abs() <= 1e-12 * t.max(1.0));
        for (a, b) in back.values().iter().zip(u.values()) {
            prop_assert!(rel(*a, *b) < 1e-12);
        }
        for i in 0..d {
            for (a, b) in back.grid().centers(i).iter().zip(u.grid().centers(i)) {
                prop_assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn surrogate_between_sandwich_bounds(
        me in exponents(),
        y in proptest::collection::vec(0.05f64..20.0, 3),
    ) {
        let se = derive_similarity(&me);
        let cal = VssCalibration::surrogate(&me, Normalization::Certified);
        let y = &y[..me.dim()];
        let p = partition_min(y, 1.0, &se, &cal).unwrap();
        let lo = sandwich_bound(y, &se, cal.k1).unwrap();
        let hi = sandwich_bound(y, &se, cal.k2).unwrap();
        prop_assert!(lo <= p * (1.0 + 1e-12) && p <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn surrogate_is_mass_rescale_fixed_point(
        me in exponents(),
        y in proptest::collection::vec(0.1f64..10.0, 3),
        k in 0.01f64..100.0,
    ) {
        let se = derive_similarity(&me);
        let cal = VssCalibration::surrogate(&me, Normalization::Certified);
        let f = |z: &[f64]| partition_min(z, 1.0, &se, &cal).unwrap();
        let g = mass_rescale(f, k, &se);
        let y = &y[..me.dim()];
        prop_assert!(rel(g(y), f(y)) < 1e-10 * f(y).abs().max(1.0));
    }

    #[test]
    fn gauge_is_homogeneous(
        me in exponents(),
        y in proptest::collection::vec(-10.0f64..10.0, 3),
        k in 0.01f64..100.0,
    ) {
        let se = derive_similarity(&me);
        let y = &y[..me.dim()];
        let scaled: Vec<f64> = y.iter().zip(&se.gamma).map(|(v, g)| v * k.powf(*g)).collect();
        let a = anisotropic_gauge(&scaled, &se).unwrap();
        let b = anisotropic_gauge(y, &se).unwrap();
        prop_assert!((a - k * b).abs() <= 1e-10 * (k * b).max(1e-300));
    }

    #[test]
    fn second_difference_is_linear(
        a in proptest::collection::vec(-5.0f64..5.0, 48),
        b in proptest::collection::vec(-5.0f64..5.0, 48),
        s in -3.0f64..3.0,
        axis in 0usize..2,
    ) {
        let g = TensorGrid::new(vec![2.0, 3.0], vec![6, 8]).unwrap();
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + s * y).collect();
        for ghost in [Ghost::Zero, Ghost::Mirror] {
            let da = grid::second_difference(&g, &a, axis, &ghost);
            let db = grid::second_difference(&g, &b, axis, &ghost);
            let dm = grid::second_difference(&g, &mix, axis, &ghost);
            for k in 0..g.len() {
                prop_assert!((dm[k] - da[k] - s * db[k]).abs() < 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn explicit_solver_conserves_mass_and_is_deterministic(
        m in 0.3f64..0.95,
        vals in proptest::collection::vec(0.1f64..2.0, 64),
    ) {
        let me = validate_exponents(1, &[m]).unwrap();
        let g = TensorGrid::cube(1, 4.0, 64).unwrap();
        let u0 = ScalarField::new(g, vals, 0.0).unwrap();
        let cfg = SolverConfig::default();
        let a = solver::solve_cauchy(&u0, 0.05, &me, &cfg).unwrap();
        let b = solver::solve_cauchy(&u0, 0.05, &me, &cfg).unwrap();
        prop_assert_eq!(a.last().values(), b.last().values());
        prop_assert!(a.relative_mass_drift() < 1e-12);
        prop_assert!(a.last().values().iter().all(|&v| v > 0.0));
        prop_assert!(grid::sup_norm(a.last()) <= grid::sup_norm(&u0) * (1.0 + 1e-12));
    }
}
