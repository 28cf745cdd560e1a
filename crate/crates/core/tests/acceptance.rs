//! Acceptance suite: one line per criterion. Runs without the libtest
//! harness so the lines are always printed; exits nonzero when any outcome
//! differs from `EXPECTED_FAIL`.

use afde::closed_forms::*;
use afde::similarity::{derive_similarity, validate_exponents};
use afde::verify::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

// Criteria with a measured, documented floor above their threshold (see the
// decisions ledger). A pass here is also reported as a mismatch so the table
// cannot go stale.
const EXPECTED_FAIL: &[u32] = &[7];

const ALGEBRA_SETS: usize = 1000;
const ALGEBRA_TOL: f64 = 1e-12;
const RESIDUAL_H: f64 = 1e-3;
const RESIDUAL_TOL: f64 = 1e-5;
const BENCH_L1: f64 = 1e-2;
const BENCH_RATIO: f64 = 1.7;
const BENCH_DRIFT: f64 = 1e-10;
const SUP_SLOPE_TOL: f64 = 0.05;
const WIDTH_SLOPE_TOL: f64 = 0.07;
const PROFILE_LINF: f64 = 0.02;
const PROFILE_SSNI: f64 = 1e-6;
const STEADY_TOL: f64 = 1e-4;
const TAIL_TOL: f64 = 0.05;
const BAND_MAX: f64 = 10.0;
const LOG_RATIO_SLOPE: f64 = 0.1;
const MONOTONE_TOL: f64 = 1e-8;
const COLLAPSE_TOL: f64 = 0.03;
const EXACT_SLICE_TOL: f64 = 0.02;
const HALVING: f64 = 0.5;
const DELAYED_RATE_TOL: f64 = 0.2;
const CONTRACTION_TOL: f64 = 1e-10;
const ORDER_TOL: f64 = 1e-12;
const Y_SCALING_TOL: f64 = 5e-3;
const HOLDER_TOL: f64 = 1e-8;
const GROWTH_SLACK: f64 = 0.1;

struct Outcome {
    passed: bool,
    detail: String,
}

/// All listed verdicts must pass; the detail echoes each measurement.
fn verdicts(rep: &ExperimentReport, names: &[&str]) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for name in names {
        match rep.get_verdict(name) {
            Some(v) => {
                passed &= v.passed;
                parts.push(format!("{}={:.4e}{}", v.criterion, v.measured, if v.passed { "" } else { "(x)" }));
            }
            None => {
                passed = false;
                parts.push(format!("{name} missing"));
            }
        }
    }
    Outcome { passed, detail: parts.join(" ") }
}

fn merge(a: Outcome, b: Outcome) -> Outcome {
    Outcome { passed: a.passed && b.passed, detail: format!("{} {}", a.detail, b.detail) }
}

fn failed(e: impl std::fmt::Display) -> Outcome {
    Outcome { passed: false, detail: format!("error: {e}") }
}

fn c1_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < ALGEBRA_SETS {
        let n = rng.gen_range(1..=4usize);
        let m: Vec<f64> = (0..n).map(|_| rng.gen_range(0.001..0.999)).collect();
        let Ok(me) = validate_exponents(n, &m) else { continue };
        let se = derive_similarity(&me);
        // deviation of each identity relative to the magnitude of its terms
        let dev = |terms: &[f64], rhs: f64| {
            let lhs: f64 = terms.iter().sum();
            (lhs - rhs).abs() / terms.iter().map(|t| t.abs()).sum::<f64>().max(rhs.abs())
        };
        worst = worst.max(dev(&se.sigma, 1.0));
        for i in 0..n {
            worst = worst.max(dev(&[se.alpha * (m[i] - 1.0), 2.0 * se.a[i]], 1.0));
            worst = worst.max(dev(&[se.sigma[i], -se.gamma[i]], 1.0 / (2.0 * se.alpha)));
        }
        let mut beta_terms = vec![se.beta];
        beta_terms.extend(&se.gamma);
        worst = worst.max(dev(&beta_terms, 1.0));
        done += 1;
    }
    Outcome { passed: worst <= ALGEBRA_TOL, detail: format!("{done} sets, worst relative deviation {worst:.2e}") }
}

fn c2_closed_forms() -> Result<Outcome, Box<dyn std::error::Error>> {
    let m = 0.5;
    let me1 = validate_exponents(1, &[m])?;
    let se1 = derive_similarity(&me1);
    let bar = |y: &[f64]| barenblatt_profile_1d(y[0], m, 1.0, Normalization::Certified).unwrap();
    let mut bar_res = 0.0f64;
    for y in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
        bar_res = bar_res.max(residual_stationary(&bar, &me1, &se1, &[y], RESIDUAL_H)?.abs());
    }
    let vss = |x: &[f64], t: f64| vss_1d(x[0], t, m, Normalization::Certified).unwrap();
    let mut vss_res = 0.0f64;
    for x in [2.0, 3.0, 4.0] {
        for t in [1.0, 2.0] {
            vss_res = vss_res.max(residual_evolution(&vss, &me1, &[x], t, RESIDUAL_H)?.abs());
        }
    }
    let me2 = validate_exponents(2, &[m, m])?;
    let se2 = derive_similarity(&me2);
    let iso = |e: IsotropicExponent| -> Result<f64, ClosedFormError> {
        let f = move |y: &[f64]| isotropic_profile(y, m, 1.0, e).unwrap();
        let mut worst = 0.0f64;
        for p in [[0.0, 0.0], [0.5, 0.3], [1.0, 1.0], [2.0, -1.0]] {
            worst = worst.max(residual_stationary(&f, &me2, &se2, &p, RESIDUAL_H)?.abs());
        }
        Ok(worst)
    };
    let corrected = iso(IsotropicExponent::Corrected)?;
    let printed = iso(IsotropicExponent::Printed)?;
    Ok(Outcome {
        passed: bar_res <= RESIDUAL_TOL && vss_res <= RESIDUAL_TOL && corrected <= RESIDUAL_TOL && printed > RESIDUAL_TOL,
        detail: format!(
            "barenblatt {bar_res:.2e}, vss {vss_res:.2e}, isotropic -1/(1-m) {corrected:.2e}, -2/(1-m) {printed:.2e} (must fail)"
        ),
    })
}

fn main() {
    let start = Instant::now();
    let iso = validate_exponents(2, &[0.5, 0.5]).expect("valid");
    let aniso = validate_exponents(2, &[0.8, 0.4]).expect("valid");
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut line = |id: u32, name: &'static str, out: Outcome, t: Instant| {
        let tag = if out.passed { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {tag} {name:<28} [{:6.1}s] {}", t.elapsed().as_secs_f64(), out.detail);
        results.push((id, name, out));
    };

    let t = Instant::now();
    line(1, "similarity algebra", c1_algebra(), t);

    let t = Instant::now();
    line(2, "closed-form certification", c2_closed_forms().unwrap_or_else(failed), t);

    let t = Instant::now();
    let cfg = BenchmarkConfig { error_tol: BENCH_L1, min_refinement_ratio: BENCH_RATIO, mass_drift_tol: BENCH_DRIFT, ..Default::default() };
    let out = match exp_barenblatt_benchmark(&cfg) {
        Ok(r) => verdicts(&r, &["benchmark.l1_error", "benchmark.refinement", "benchmark.mass_drift"]),
        Err(e) => failed(e),
    };
    line(3, "solver benchmark", out, t);

    let t = Instant::now();
    let smoothing = |me| {
        let cfg = SmoothingConfig { sup_tol: SUP_SLOPE_TOL, width_tol: WIDTH_SLOPE_TOL, ..SmoothingConfig::for_exponents(me) };
        exp_smoothing_and_spread(me, &cfg)
    };
    let iso_rep = smoothing(&iso);
    let aniso_rep = smoothing(&aniso);
    let out = match (&iso_rep, &aniso_rep) {
        (Ok(a), Ok(b)) => merge(verdicts(a, &["smoothing.sup_slope"]), verdicts(b, &["smoothing.sup_slope"])),
        (Err(e), _) | (_, Err(e)) => failed(e),
    };
    line(4, "smoothing exponent", out, t);

    let t = Instant::now();
    let out = match &aniso_rep {
        Ok(r) => verdicts(r, &["spread.width_slope.1", "spread.width_slope.2"]),
        Err(e) => failed(e),
    };
    line(5, "anisotropic spreading", out, t);

    let t = Instant::now();
    let mut cfg = IsotropicProfileConfig { linf_tol: PROFILE_LINF, ssni_tol: PROFILE_SSNI, ..Default::default() };
    cfg.profile.steady_tol = STEADY_TOL;
    let out = match exp_isotropic_profile(&cfg) {
        Ok(r) => verdicts(&r, &["profile.linf_inner", "profile.ssni", "profile.steady_rate"]),
        Err(e) => failed(e),
    };
    line(6, "fundamental profile", out, t);

    let t = Instant::now();
    let cfg = TailConfig {
        tail_tol: TAIL_TOL,
        band_max: BAND_MAX,
        slope_tol: LOG_RATIO_SLOPE,
        collapse_tol: COLLAPSE_TOL,
        monotone_tol: MONOTONE_TOL,
        ..Default::default()
    };
    let tail = exp_profile_and_tail(&aniso, &cfg);
    let out = match &tail {
        Ok(r) => verdicts(
            r,
            &["tail.exponent.1", "tail.exponent.2", "tail.band", "tail.surrogate_slope.1", "tail.surrogate_slope.2"],
        ),
        Err(e) => failed(e),
    };
    line(7, "universal tail", out, t);

    let t = Instant::now();
    let out = match &tail {
        Ok(r) => verdicts(r, &["ladder.monotone", "ladder.collapse"]),
        Err(e) => failed(e),
    };
    line(8, "vss limit collapse", out, t);

    let relax = RelaxationConfig {
        exact_tol: EXACT_SLICE_TOL,
        halving: HALVING,
        delayed_rate: -1.0,
        delayed_rate_tol: DELAYED_RATE_TOL,
        ..Default::default()
    };
    let t = Instant::now();
    let out = match exp_ghp(&aniso, &relax) {
        Ok(r) => verdicts(&r, &["ghp.bounds", "ghp.ratio_trend", "ghp.exact_slice"]),
        Err(e) => failed(e),
    };
    line(9, "global harnack principle", out, t);

    let t = Instant::now();
    let out = match exp_acre(&aniso, &relax) {
        Ok(r) => {
            let mut o = verdicts(&r, &["acre.halving", "acre.delayed_rate"]);
            if let Some(v) = r.get_verdict("acre.core") {
                o.detail.push_str(&format!(" | info: acre.core {} ({:.3e} vs {:.3e})", v.passed, v.measured, v.target));
            }
            o
        }
        Err(e) => failed(e),
    };
    line(10, "relative error convergence", out, t);

    let t = Instant::now();
    let sg = SemigroupConfig { contraction_tol: CONTRACTION_TOL, order_tol: ORDER_TOL, ..Default::default() };
    let out = match exp_rates_and_semigroup(&aniso, &relax, &sg) {
        Ok(r) => verdicts(
            &r,
            &["semigroup.contraction", "semigroup.order", "rates.l1_decreasing", "rates.l2_decreasing"],
        ),
        Err(e) => failed(e),
    };
    line(11, "semigroup properties", out, t);

    let t = Instant::now();
    let cfg = LocalMassConfig { scaling_tol: Y_SCALING_TOL, holder_tol: HOLDER_TOL, growth_slack: GROWTH_SLACK, ..Default::default() };
    let out = match exp_local_mass(&aniso, &cfg) {
        Ok(r) => verdicts(&r, &["local.y_scaling", "local.holder", "local.ode_margin", "local.growth"]),
        Err(e) => failed(e),
    };
    line(12, "local mass", out, t);

    let passed = results.iter().filter(|r| r.2.passed).count();
    println!("acceptance: {passed}/{} criteria pass in {:.1}s", results.len(), start.elapsed().as_secs_f64());
    let mismatched: Vec<u32> = results
        .iter()
        .filter(|(id, _, o)| o.passed == EXPECTED_FAIL.contains(id))
        .map(|(id, _, _)| *id)
        .collect();
    if !EXPECTED_FAIL.is_empty() {
        println!("expected failures (documented floors): {EXPECTED_FAIL:?}");
    }
    if !mismatched.is_empty() {
        println!("outcome differs from the expected table for criteria {mismatched:?}");
        std::process::exit(1);
    }
}
