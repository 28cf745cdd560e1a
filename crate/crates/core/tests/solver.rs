use afde::grid::{self, ScalarField, TensorGrid};
use afde::similarity::{derive_similarity, validate_exponents};
use afde::solver::{self, BoundaryCondition, Floor, ProfileConfig, Scheme, SolverConfig, SolverError};

fn box_datum(g: &TensorGrid<f64>, w: f64) -> ScalarField<f64> {
    grid::sample(|x: &[f64]| if x.iter().all(|v| v.abs() <= w) { 1.0 } else { 0.0 }, g, 0.0).unwrap()
}

#[test]
fn stable_dt_at_unit_state() {
    let me = validate_exponents(2, &[0.8, 0.4]).unwrap();
    let g = TensorGrid::new(vec![1.0, 2.0], vec![12, 20]).unwrap();
    let u = ScalarField::new(g.clone(), vec![1.0; g.len()], 0.0).unwrap();
    let cfg = SolverConfig::default();
    let dt = solver::stable_dt(&u, &me, &cfg).unwrap();
    let h1 = 2.0 / 12.0;
    let expected: f64 = 0.9 / (2.0 * (0.8 / (h1 * h1) + 0.4 / (0.2 * 0.2)));
    assert!((dt - expected).abs() < 1e-15 * expected);

    let coarse = TensorGrid::new(vec![1.0, 2.0], vec![6, 10]).unwrap();
    let uc = ScalarField::new(coarse.clone(), vec![1.0; coarse.len()], 0.0).unwrap();
    let dtc = solver::stable_dt(&uc, &me, &cfg).unwrap();
    assert!((dtc / dt - 4.0).abs() < 1e-12);
}

#[test]
fn stable_dt_shrinks_with_the_floor() {
    let me = validate_exponents(1, &[0.5]).unwrap();
    let g = TensorGrid::cube(1, 1.0, 8).unwrap();
    let mut vals = vec![1.0; 8];
    vals[3] = 0.0;
    let u = ScalarField::new(g, vals, 0.0).unwrap();
    let mut last = f64::INFINITY;
    for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
        let cfg = SolverConfig { floor: Floor::Absolute(eps), ..SolverConfig::default() };
        let dt = solver::stable_dt(&u, &me, &cfg).unwrap();
        assert!(dt < last);
        last = dt;
    }
    let cfg = SolverConfig { floor: Floor::Absolute(0.0), ..SolverConfig::default() };
    assert!(matches!(solver::stable_dt(&u, &me, &cfg), Err(SolverError::UnboundedDiffusivity(3))));
}

#[test]
fn compact_support_stays_nonnegative_and_conserves_mass() {
    for (m, n) in [(vec![0.4], vec![64]), (vec![0.8, 0.4], vec![16, 16])] {
        let me = validate_exponents(m.len(), &m).unwrap();
        let g = TensorGrid::new(vec![4.0f64; m.len()], n).unwrap();
        let u0 = box_datum(&g, 0.5);
        let cfg = SolverConfig::default();
        let tr = solver::solve_cauchy(&u0, 0.05, &me, &cfg).unwrap();
        assert!(tr.snapshots.iter().all(|s| s.values().iter().all(|&v| v >= 0.0)));
        assert!(tr.relative_mass_drift() < 1e-12, "{m:?}: drift {}", tr.relative_mass_drift());
    }
}

#[test]
fn implicit_scheme_conserves_mass_with_reflecting_walls() {
    let me = validate_exponents(2, &[0.8, 0.4]).unwrap();
    let g = TensorGrid::cube(2, 4.0, 16).unwrap();
    let u0 = box_datum(&g, 1.0);
    let cfg = SolverConfig { scheme: Scheme::LinearlyImplicit, snapshots: vec![0.1], ..SolverConfig::default() };
    let tr = solver::solve_cauchy(&u0, 0.5, &me, &cfg).unwrap();
    assert_eq!(tr.snapshots.len(), 3);
    assert_eq!(tr.snapshots[1].time(), 0.1);
    assert!(tr.relative_mass_drift() < 1e-10);
    assert!(tr.last().values().iter().all(|&v| v >= 0.0));
    assert!(grid::sup_norm(tr.last()) < grid::sup_norm(&u0));
}

#[test]
fn zero_dirichlet_loses_mass() {
    let me = validate_exponents(1, &[0.5]).unwrap();
    let g = TensorGrid::cube(1, 1.0, 32).unwrap();
    let u0 = ScalarField::new(g.clone(), vec![1.0; g.len()], 0.0).unwrap();
    let cfg = SolverConfig { bc: BoundaryCondition::ZeroDirichlet, ..SolverConfig::default() };
    let tr = solver::solve_cauchy(&u0, 0.05, &me, &cfg).unwrap();
    assert!(tr.mass.windows(2).all(|w| w[1] <= w[0]));
    assert!(*tr.mass.last().unwrap() < tr.mass[0]);
}

#[test]
fn steady_profile_has_the_requested_mass() {
    let me = validate_exponents(2, &[0.5, 0.5]).unwrap();
    let se = derive_similarity(&me);
    let g = TensorGrid::cube(2, 20.0, 64).unwrap();
    let prof = solver::solve_profile(2.0f64, &me, &se, &g, &ProfileConfig::default()).unwrap();
    assert!((grid::mass(&prof.field) / 2.0 - 1.0).abs() < 5e-3);
    assert!(prof.rate <= 1e-4);
}
