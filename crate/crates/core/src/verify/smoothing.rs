use super::{geometric_times, half_mass_width, ExperimentReport, VerifyError};
use crate::fit::fit_power_law;
use crate::grid::{self, ScalarField, TensorGrid};
use crate::similarity::{derive_similarity, MediumExponents, RescaleMap};
use crate::solver::{self, BoundaryCondition, Scheme, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingConfig {
    /// Half-extents and cell counts of the self-similar grid.
    pub half: Vec<f64>,
    pub n: Vec<usize>,
    pub mass: f64,
    /// Time at which the box datum is posed.
    pub t_start: f64,
    /// Half-widths of the initial box in self-similar coordinates.
    pub box_half: Vec<f64>,
    /// Fit window in physical time and number of samples in it.
    pub window: (f64, f64),
    pub samples: usize,
    pub sup_tol: f64,
    pub width_tol: f64,
}

impl SmoothingConfig {
    /// Grid sized for the unit-mass profile of the given exponents.
    pub fn for_exponents(me: &MediumExponents<f64>) -> Self {
        let d = me.dim();
        let (half, n) = if me.is_isotropic() {
            (vec![20.0; d], vec![128; d])
        } else {
            let se = derive_similarity(me);
            // wider boxes along faster-spreading axes
            let half = se.sigma.iter().map(|&s| (100.0 * s * s).clamp(10.0, 40.0)).collect();
            (half, vec![if d == 1 { 1024 } else { 256 }; d])
        };
        let box_half = half.iter().map(|&l: &f64| l / 16.0).collect();
        SmoothingConfig {
            half,
            n,
            mass: 1.0,
            t_start: 0.01,
            box_half,
            window: (1.0, 10.0),
            samples: 16,
            sup_tol: 0.05,
            width_tol: 0.07,
        }
    }
}

/// Box datum of mass `cfg.mass` evolved in self-similar variables from
/// t_start and mapped back to physical variables at sample times in the fit
/// window. Fits sup u ~ t^(-alpha) and half-mass widths w_i ~ t^(sigma_i alpha).
pub fn exp_smoothing_and_spread(me: &MediumExponents<f64>, cfg: &SmoothingConfig) -> Result<ExperimentReport, VerifyError> {
    let se = derive_similarity(me);
    let d = me.dim();
    if cfg.half.len() != d || cfg.n.len() != d || cfg.box_half.len() != d {
        return Err(VerifyError::Config("grid and box must have one entry per axis".into()));
    }
    if !(cfg.t_start > 0.0 && cfg.t_start < cfg.window.0) {
        return Err(VerifyError::Config("need 0 < t_start < window start".into()));
    }
    let g = TensorGrid::new(cfg.half.clone(), cfg.n.clone())?;
    let map = RescaleMap::new(se.clone(), 0.0)?;
    let tau0 = map.tau_of(cfg.t_start)?;
    let inside = |y: &[f64]| (0..d).all(|i| y[i].abs() < cfg.box_half[i]);
    let raw = grid::sample(|y: &[f64]| if inside(y) { 1.0 } else { 0.0 }, &g, tau0)?;
    let m0 = grid::mass(&raw);
    if m0 == 0.0 {
        return Err(VerifyError::Config("initial box contains no cell centers".into()));
    }
    let v0 = ScalarField::new(g.clone(), raw.values().iter().map(|v| v * cfg.mass / m0).collect(), tau0)?;

    let times = geometric_times(cfg.window.0, cfg.window.1, cfg.samples);
    let taus: Vec<f64> = times.iter().map(|&t| map.tau_of(t)).collect::<Result<_, _>>()?;
    let scfg = SolverConfig {
        scheme: Scheme::LinearlyImplicit,
        bc: BoundaryCondition::Reflecting,
        snapshots: taus[..taus.len() - 1].to_vec(),
        ..SolverConfig::default()
    };
    let traj = solver::solve_rescaled(&v0, *taus.last().expect("samples >= 2"), me, &se, &scfg)?;

    let mut sup = Vec::new();
    let mut widths = vec![Vec::new(); d];
    let mut mass = Vec::new();
    for snap in traj.snapshots.iter().skip(1) {
        let (u, _) = map.from_selfsimilar(snap)?;
        sup.push(grid::sup_norm(&u));
        mass.push(grid::mass(&u));
        for (i, w) in widths.iter_mut().enumerate() {
            w.push(half_mass_width(&u, i));
        }
    }

    let mut rep = ExperimentReport::new("smoothing", me.m());
    for (i, (&l, &n)) in cfg.half.iter().zip(&cfg.n).enumerate() {
        rep.param(&format!("grid.half.{}", i + 1), l);
        rep.param(&format!("grid.n.{}", i + 1), n as f64);
    }
    rep.param("mass", cfg.mass);
    rep.param("t_start", cfg.t_start);
    rep.param("floor", traj.floor);
    rep.label("frame", "self-similar implicit run mapped back to physical variables");
    rep.series("sup", &times, &sup);
    rep.series("mass", &times, &mass);

    let fit = fit_power_law(&times, &sup, cfg.window)?;
    rep.fit("sup", fit.clone(), Some(-se.alpha));
    rep.exponent_verdict("smoothing.sup_slope", &fit, -se.alpha, cfg.sup_tol);
    for i in 0..d {
        let name = format!("width.{}", i + 1);
        rep.series(&name, &times, &widths[i]);
        let target = se.a[i];
        let fit = fit_power_law(&times, &widths[i], cfg.window)?;
        rep.fit(&name, fit.clone(), Some(target));
        rep.exponent_verdict(&format!("spread.width_slope.{}", i + 1), &fit, target, cfg.width_tol);
    }
    let drift = mass.iter().fold(0.0f64, |a, &m| a.max((m / cfg.mass - 1.0).abs()));
    rep.verdict("smoothing.mass", drift <= 0.01, drift, 0.0, 0.01, "relative mass drift over the window");
    Ok(rep)
}
