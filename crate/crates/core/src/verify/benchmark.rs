use super::{ExperimentReport, VerifyError};
use crate::closed_forms::{barenblatt_profile_1d, Normalization};
use crate::grid::{self, TensorGrid};
use crate::similarity::{derive_similarity, validate_exponents};
use crate::solver::{self, BoundaryCondition, SolverConfig};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub m: f64,
    pub c: f64,
    pub half: f64,
    /// Coarse spacing; the refinement run uses half of it.
    pub h: f64,
    pub t0: f64,
    pub t1: f64,
    pub error_tol: f64,
    pub min_refinement_ratio: f64,
    pub mass_drift_tol: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            m: 0.5,
            c: 1.0,
            half: 20.0,
            h: 0.05,
            t0: 1.0,
            t1: 2.0,
            error_tol: 1e-2,
            min_refinement_ratio: 1.7,
            mass_drift_tol: 1e-10,
        }
    }
}

/// 1D Barenblatt solution t^(-alpha) F(x t^(-alpha)) evolved explicitly from
/// t0 to t1 with barrier-Dirichlet data from the exact solution, at h and
/// h/2, plus a reflecting run for mass conservation.
pub fn exp_barenblatt_benchmark(cfg: &BenchmarkConfig) -> Result<ExperimentReport, VerifyError> {
    let me = validate_exponents(1, &[cfg.m])?;
    let se = derive_similarity(&me);
    let (m, c, alpha) = (cfg.m, cfg.c, se.alpha);
    let exact = move |x: f64, t: f64| -> f64 {
        t.powf(-alpha) * barenblatt_profile_1d(x * t.powf(-alpha), m, c, Normalization::Certified).unwrap_or(0.0)
    };
    let mut rep = ExperimentReport::new("barenblatt_benchmark", &[cfg.m]);
    rep.param("c", cfg.c);
    rep.param("half", cfg.half);
    rep.param("h", cfg.h);
    rep.param("t0", cfg.t0);
    rep.param("t1", cfg.t1);

    let run = |h: f64, bc: BoundaryCondition<f64>| -> Result<(f64, f64), VerifyError> {
        let n = (2.0 * cfg.half / h).round() as usize;
        let g = TensorGrid::new(vec![cfg.half], vec![n])?;
        let u0 = grid::sample(|x: &[f64]| exact(x[0], cfg.t0), &g, cfg.t0)?;
        let scfg = SolverConfig { bc, ..SolverConfig::default() };
        let traj = solver::solve_cauchy(&u0, cfg.t1, &me, &scfg)?;
        let u = traj.last();
        let reference = grid::sample(|x: &[f64]| exact(x[0], cfg.t1), &g, cfg.t1)?;
        let diff: Vec<f64> = u.values().iter().zip(reference.values()).map(|(a, b)| a - b).collect();
        let err = grid::lp_norm_signed(&g, &diff, 1.0) / grid::mass(&reference);
        Ok((err, traj.relative_mass_drift()))
    };
    let barrier = || BoundaryCondition::BarrierDirichlet(Arc::new(move |x: &[f64], t: f64| exact(x[0], t)));
    let (e1, _) = run(cfg.h, barrier())?;
    let (e2, _) = run(cfg.h / 2.0, barrier())?;
    let (_, drift) = run(cfg.h, BoundaryCondition::Reflecting)?;
    rep.series("l1_error", &[cfg.h, cfg.h / 2.0], &[e1, e2]);
    rep.verdict("benchmark.l1_error", e1 <= cfg.error_tol, e1, 0.0, cfg.error_tol, "relative L1 error at t1");
    let ratio = e1 / e2;
    rep.verdict(
        "benchmark.refinement",
        ratio >= cfg.min_refinement_ratio,
        ratio,
        cfg.min_refinement_ratio,
        0.0,
        format!("observed order {:.3}", ratio.log2()),
    );
    rep.verdict("benchmark.mass_drift", drift <= cfg.mass_drift_tol, drift, 0.0, cfg.mass_drift_tol, "reflecting walls");
    Ok(rep)
}
