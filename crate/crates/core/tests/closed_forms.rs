use afde::closed_forms::*;
use afde::similarity::{derive_similarity, validate_exponents};

fn stationary_1d(m: f64, norm: Normalization, y: f64) -> f64 {
    let me = validate_exponents(1, &[m]).unwrap();
    let se = derive_similarity(&me);
    let f = |p: &[f64]| barenblatt_profile_1d(p[0], m, 1.0, norm).unwrap();
    residual_stationary(&f, &me, &se, &[y], 1e-3).unwrap()
}

#[test]
fn certified_barenblatt_solves_the_profile_equation() {
    for m in [0.3, 0.5, 0.8] {
        for y in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let r = stationary_1d(m, Normalization::Certified, y);
            assert!(r.abs() <= 1e-5, "m = {m}, y = {y}: residual {r:e}");
        }
    }
}

#[test]
fn printed_barenblatt_fails_the_profile_equation() {
    let worst = [0.5, 1.0, 2.0].iter().map(|&y| stationary_1d(0.5, Normalization::Printed, y).abs()).fold(0.0, f64::max);
    assert!(worst > 1e-2, "printed normalization unexpectedly passes: {worst:e}");
}

#[test]
fn vss_solves_the_evolution_equation() {
    let me = validate_exponents(1, &[0.5]).unwrap();
    let u = |x: &[f64], t: f64| vss_1d(x[0], t, 0.5, Normalization::Certified).unwrap();
    for x in [2.0, 3.0, 4.0, -2.5] {
        for t in [1.0, 2.0] {
            let r = residual_evolution(&u, &me, &[x], t, 1e-3).unwrap();
            assert!(r.abs() <= 1e-5, "x = {x}, t = {t}: residual {r:e}");
        }
    }
}

#[test]
fn isotropic_exponent_regression() {
    let me = validate_exponents(2, &[0.5, 0.5]).unwrap();
    let se = derive_similarity(&me);
    let pts = [[0.0, 0.0], [0.5, 0.3], [1.0, 1.0], [2.0, -1.0]];
    let res = |e: IsotropicExponent| {
        let f = move |y: &[f64]| isotropic_profile(y, 0.5, 1.0, e).unwrap();
        pts.iter().map(|p| residual_stationary(&f, &me, &se, p, 1e-3).unwrap().abs()).fold(0.0, f64::max)
    };
    assert!(res(IsotropicExponent::Corrected) <= 1e-5);
    assert!(res(IsotropicExponent::Printed) > 1e-2);
}

#[test]
fn isotropic_profile_matches_1d_in_one_dimension() {
    for y in [0.0f64, 0.7, 3.0] {
        let a = isotropic_profile(&[y], 0.5, 1.0, IsotropicExponent::Corrected).unwrap();
        let b = barenblatt_profile_1d(y, 0.5, 1.0, Normalization::Certified).unwrap();
        assert!((a - b).abs() <= 1e-14 * b);
    }
}

#[test]
fn isotropic_mass_by_quadrature() {
    // polar midpoint rule against the closed-form mass of the unit-mass profile
    let m = 0.5;
    let c = isotropic_constant_for_mass(m, 2, 1.0).unwrap();
    let (nr, rmax) = (400_000, 4000.0);
    let dr = rmax / nr as f64;
    let mass: f64 = (0..nr)
        .map(|j| {
            let r = (j as f64 + 0.5) * dr;
            2.0 * std::f64::consts::PI * r * isotropic_profile(&[r, 0.0], m, c, IsotropicExponent::Corrected).unwrap() * dr
        })
        .sum();
    assert!((mass - 1.0).abs() < 1e-3, "mass {mass}");
}

#[test]
fn vss_scales_with_mass_rescale() {
    let me = validate_exponents(2, &[0.8, 0.4]).unwrap();
    let se = derive_similarity(&me);
    let cal = VssCalibration::surrogate(&me, Normalization::Certified);
    let p = |y: &[f64]| partition_min(y, 1.0, &se, &cal).unwrap();
    // partition surrogate at time t is t^mu_i C_i |x_i|^(-2 mu_i) on its active axis
    let x = [3.0, 0.2];
    let (v, i) = partition_argmin(&x, 2.0, &se, &cal).unwrap();
    assert!((v - 2f64.powf(se.mu[i]) * cal.c[i] * x[i].abs().powf(-2.0 * se.mu[i])).abs() <= 1e-12 * v);
    let y = [1.5, 0.7];
    let g = mass_rescale(p, 7.0, &se);
    assert!((g(&y) / p(&y) - 1.0).abs() < 1e-12);
}

#[test]
fn level_line_lands_on_the_level() {
    let me = validate_exponents(2, &[0.8, 0.4]).unwrap();
    let se = derive_similarity(&me);
    let cal = VssCalibration::surrogate(&me, Normalization::Certified);
    let th = 0.7f64;
    let omega = [th.cos(), th.sin()];
    for level in [1e-3, 1.0, 50.0] {
        let x = level_line(&omega, level, &se, &cal).unwrap();
        let v = partition_min(&x, 1.0, &se, &cal).unwrap();
        assert!((v / level - 1.0).abs() < 1e-10, "level {level}: {v}");
    }
}
