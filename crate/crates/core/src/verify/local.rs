use super::{geometric_times, ExperimentReport, VerifyError};
use crate::grid::{self, AxisBox, ScalarField, TensorGrid};
use crate::local_mass::{build_bump, default_flatness, ode_mass_bound, verify_local_mass};
use crate::similarity::MediumExponents;
use crate::solver::{self, BoundaryCondition, Scheme, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct LocalMassConfig {
    pub half: Vec<f64>,
    pub n: Vec<usize>,
    /// Probe box K; all mass starts in the centered box of half-widths
    /// `source_half`, outside K.
    pub probe_lo: Vec<f64>,
    pub probe_hi: Vec<f64>,
    pub source_half: Vec<f64>,
    pub masses: Vec<f64>,
    pub t_end: f64,
    pub samples: usize,
    /// Box-size factors for the Y_i scaling law.
    pub scales: Vec<f64>,
    pub scaling_tol: f64,
    pub holder_tol: f64,
    pub growth_slack: f64,
}

impl Default for LocalMassConfig {
    fn default() -> Self {
        LocalMassConfig {
            half: vec![8.0, 8.0],
            n: vec![128, 128],
            probe_lo: vec![2.0, 1.0],
            probe_hi: vec![6.0, 5.0],
            source_half: vec![1.0, 1.0],
            masses: vec![1.0, 10.0, 100.0],
            t_end: 1.0,
            samples: 16,
            scales: vec![1.0, 2.0, 4.0],
            scaling_tol: 5e-3,
            holder_tol: 1e-8,
            growth_slack: 0.1,
        }
    }
}

/// Y_i scaling law over a range of box sizes, then a mass ladder started
/// outside the probe: the windowed mass must respect the ODE bound started
/// from X(0) = 0, which does not depend on the mass.
pub fn exp_local_mass(me: &MediumExponents<f64>, cfg: &LocalMassConfig) -> Result<ExperimentReport, VerifyError> {
    let d = me.dim();
    let per_axis = [&cfg.half.len(), &cfg.n.len(), &cfg.probe_lo.len(), &cfg.probe_hi.len(), &cfg.source_half.len()];
    if per_axis.iter().any(|&&l| l != d) {
        return Err(VerifyError::Config("geometry needs one entry per axis".into()));
    }
    let k: Vec<f64> = me.m().iter().map(|&m| default_flatness(m)).collect();
    let mut rep = ExperimentReport::new("local_mass", me.m());
    for i in 0..d {
        rep.param(&format!("k.{}", i + 1), k[i]);
        rep.param(&format!("probe.lo.{}", i + 1), cfg.probe_lo[i]);
        rep.param(&format!("probe.hi.{}", i + 1), cfg.probe_hi[i]);
    }

    // scaling law Y_i ~ V(K) L_i^(-2/(1-m_i)), stretching one axis at a time
    let base = AxisBox::new(cfg.probe_lo.clone(), cfg.probe_hi.clone())?;
    let y0 = build_bump(base.clone(), k.clone(), me)?.y;
    let mut worst = 0.0f64;
    for axis in 0..d {
        for &s in &cfg.scales {
            let mut hi = cfg.probe_hi.clone();
            hi[axis] = cfg.probe_lo[axis] + s * base.length(axis);
            let y = build_bump(AxisBox::new(cfg.probe_lo.clone(), hi)?, k.clone(), me)?.y;
            for i in 0..d {
                let law = if i == axis { s * s.powf(-2.0 / (1.0 - me.m()[i])) } else { s };
                worst = worst.max((y[i] / y0[i] / law - 1.0).abs());
            }
        }
    }
    rep.verdict("local.y_scaling", worst <= cfg.scaling_tol, worst, 0.0, cfg.scaling_tol, "max relative deviation from the scaling law");

    let probe = build_bump(base, k, me)?;
    for (i, y) in probe.y.iter().enumerate() {
        rep.param(&format!("y.{}", i + 1), *y);
    }
    let g = TensorGrid::new(cfg.half.clone(), cfg.n.clone())?;
    let times = geometric_times(cfg.t_end / 100.0, cfg.t_end, cfg.samples);
    let scfg = SolverConfig {
        scheme: Scheme::LinearlyImplicit,
        bc: BoundaryCondition::Reflecting,
        snapshots: times[..times.len() - 1].to_vec(),
        ..SolverConfig::default()
    };
    let (mut holder, mut margin, mut growth) = (f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let bound_cap = 1.0 / (1.0 - me.m_max()) * (1.0 + cfg.growth_slack);
    for &mass in &cfg.masses {
        let src = |x: &[f64]| if (0..d).all(|i| x[i].abs() < cfg.source_half[i]) { 1.0 } else { 0.0 };
        let raw = grid::sample(src, &g, 0.0)?;
        let m0 = grid::mass(&raw);
        let u0 = ScalarField::new(g.clone(), raw.values().iter().map(|v| v * mass / m0).collect(), 0.0)?;
        let traj = solver::solve_cauchy(&u0, cfg.t_end, me, &scfg)?;
        // violations are scored by the margin verdict below rather than raised
        let r = verify_local_mass(&traj, &probe, me, f64::INFINITY)?;
        let tag = format!("mass_{mass}");
        rep.series(&format!("{tag}.x"), &r.times, &r.x);
        rep.series(&format!("{tag}.bound"), &r.times, &r.bound);
        rep.series(&format!("{tag}.margin"), &r.times, &r.margin);
        for (a, b) in r.holder_lhs.iter().zip(&r.holder_rhs) {
            holder = holder.max(a - b);
        }
        // X(0) = 0 here, so the bound is the same for every mass
        for (&t, &x) in r.times.iter().zip(&r.x).skip(1) {
            let b = ode_mass_bound(0.0, &probe.y, me, t);
            margin = margin.min((b - x) / b);
        }
        // growth over the last decade of the run
        let tail: Vec<usize> = (0..r.times.len()).filter(|&i| r.times[i] >= cfg.t_end / 10.0 && r.x[i] > 0.0).collect();
        let ts: Vec<f64> = tail.iter().map(|&i| r.times[i]).collect();
        let xs: Vec<f64> = tail.iter().map(|&i| r.x[i] / probe.volume).collect();
        let fit = crate::fit::fit_power_law(&ts, &xs, (cfg.t_end / 10.0, cfg.t_end))?;
        growth = growth.max(fit.exponent);
        rep.fit(&format!("{tag}.growth"), fit, None);
    }
    rep.verdict("local.holder", holder <= cfg.holder_tol, holder, 0.0, cfg.holder_tol, "max of lhs - rhs of the discrete Holder step");
    rep.verdict("local.ode_margin", margin > 0.0, margin, 0.0, 0.0, "min over masses and snapshots of (bound - X) / bound");
    rep.verdict("local.growth", growth <= bound_cap, growth, bound_cap, cfg.growth_slack, "largest fitted growth exponent of X / V(K)");
    Ok(rep)
}
