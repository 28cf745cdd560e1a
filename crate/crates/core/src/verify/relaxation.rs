use super::{geometric_times, ExperimentReport, FieldInterp, VerifyError};
use crate::closed_forms::{delayed_relative_error, partition_min, Normalization, VssCalibration};
use crate::fit::fit_power_law;
use crate::grid::{self, ScalarField, TensorGrid};
use crate::similarity::{derive_similarity, MediumExponents, RescaleMap, SimilarityExponents};
use crate::solver::{self, solve_profile, BoundaryCondition, ProfileConfig, Scheme, SolverConfig};
use crate::Field;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Initial data posed at t = 1, given in self-similar variables.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// The discrete profile itself, i.e. U_M(., 1).
    ExactSlice,
    /// U_M(., 1 + h).
    Delayed { h: f64 },
    /// min(A (1 + sum_i ((y_i - c_i) / w_i)^2)^(-p), partition surrogate at
    /// t = 1), with A fixed by the mass.
    ClippedBump { center: Vec<f64>, width: Vec<f64>, power: f64 },
}

impl InitialData {
    fn name(&self) -> &'static str {
        match self {
            InitialData::ExactSlice => "exact",
            InitialData::Delayed { .. } => "delayed",
            InitialData::ClippedBump { .. } => "bump",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationConfig {
    pub mass: f64,
    pub half: Vec<f64>,
    pub n: Vec<usize>,
    /// Comparison window [T, 10T] in physical time; data are posed at t = 1.
    pub window: (f64, f64),
    pub samples: usize,
    pub profile: ProfileConfig<f64>,
    pub bump: InitialData,
    pub delay: f64,
    /// Inner core |y_i| <= core_k, i.e. |x_i| <= core_k t^(sigma_i alpha).
    pub core_k: f64,
    /// Cells where the profile is below this value are excluded from ratios.
    pub clip: f64,
    pub exact_tol: f64,
    pub halving: f64,
    pub delayed_rate: f64,
    pub delayed_rate_tol: f64,
}

impl Default for RelaxationConfig {
    /// Sized for m = (0.8, 0.4) and unit mass.
    fn default() -> Self {
        RelaxationConfig {
            mass: 1.0,
            half: vec![12.0, 24.0],
            n: vec![256, 256],
            window: (1.0, 10.0),
            samples: 12,
            profile: ProfileConfig::default(),
            bump: InitialData::ClippedBump { center: vec![2.0, 1.0], width: vec![3.0, 2.0], power: 1.0 },
            delay: 0.1,
            core_k: 1.0,
            clip: 1e-300,
            exact_tol: 0.02,
            halving: 0.5,
            delayed_rate: -1.0,
            delayed_rate_tol: 0.2,
        }
    }
}

/// Comparison of a run against the mass-matched profile at each sample time.
#[derive(Debug, Clone)]
struct Run {
    times: Vec<f64>,
    c1: Vec<f64>,
    c2: Vec<f64>,
    err: Vec<f64>,
    err_core: Vec<f64>,
    /// t^((p-1) alpha / p) ||u - U_M||_p for p = 1, 2.
    dist: [Vec<f64>; 2],
    mass: Vec<f64>,
    matched_mass: f64,
}

fn grid_of(cfg: &RelaxationConfig, d: usize) -> Result<TensorGrid<f64>, VerifyError> {
    if cfg.half.len() != d || cfg.n.len() != d {
        return Err(VerifyError::Config("grid must have one entry per axis".into()));
    }
    if !(cfg.window.0 >= 1.0 && cfg.window.1 > cfg.window.0) {
        return Err(VerifyError::Config("comparison window must satisfy 1 <= T < T_end".into()));
    }
    Ok(TensorGrid::new(cfg.half.clone(), cfg.n.clone())?)
}

fn initial_data(
    data: &InitialData,
    me: &MediumExponents<f64>,
    se: &SimilarityExponents<f64>,
    g: &TensorGrid<f64>,
    cfg: &RelaxationConfig,
) -> Result<Field, VerifyError> {
    let d = g.dim();
    match data {
        InitialData::ExactSlice => Ok(solve_profile(cfg.mass, me, se, g, &cfg.profile)?.field),
        InitialData::Delayed { h } => {
            if !(*h > 0.0) {
                return Err(VerifyError::Config(format!("delay {h} must be positive")));
            }
            let f = solve_profile(cfg.mass, me, se, g, &cfg.profile)?.field;
            let ip = FieldInterp::new(&f);
            let s = 1.0 + h;
            let amp = s.powf(-se.alpha);
            let factors: Vec<f64> = se.sigma.iter().map(|&sg| s.powf(-sg * se.alpha)).collect();
            let vals = (0..g.len())
                .map(|k| {
                    let y = g.coords(k);
                    let z: Vec<f64> = (0..d).map(|i| y[i] * factors[i]).collect();
                    amp * ip.at(&z).expect("contracted point lies inside the grid")
                })
                .collect();
            Ok(ScalarField::new(g.clone(), vals, 0.0)?)
        }
        InitialData::ClippedBump { center, width, power } => {
            if center.len() != d || width.len() != d {
                return Err(VerifyError::Config("bump center and width need one entry per axis".into()));
            }
            let cal = VssCalibration::surrogate(me, Normalization::Certified);
            let mut bump = Vec::with_capacity(g.len());
            let mut cap = Vec::with_capacity(g.len());
            for k in 0..g.len() {
                let y = &g.coords(k)[..d];
                let q: f64 = (0..d).map(|i| ((y[i] - center[i]) / width[i]).powi(2)).sum();
                bump.push((1.0 + q).powf(-power));
                cap.push(partition_min(y, 1.0, se, &cal)?);
            }
            let build = |a: f64| -> Result<Field, VerifyError> {
                let vals = bump.iter().zip(&cap).map(|(b, c)| (a * b).min(*c)).collect();
                Ok(ScalarField::new(g.clone(), vals, 0.0)?)
            };
            let (mut lo, mut hi) = (0.0, 1.0);
            while grid::mass(&build(hi)?) < cfg.mass {
                hi *= 2.0;
                if hi > 1e300 {
                    return Err(VerifyError::Config("clipped bump cannot reach the requested mass".into()));
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if grid::mass(&build(mid)?) < cfg.mass {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            build(hi)
        }
    }
}

fn relax(me: &MediumExponents<f64>, cfg: &RelaxationConfig, data: &InitialData) -> Result<Run, VerifyError> {
    let se = derive_similarity(me);
    let d = me.dim();
    let g = grid_of(cfg, d)?;
    let map = RescaleMap::new(se.clone(), 0.0)?;
    let v0 = initial_data(data, me, &se, &g, cfg)?;
    let times = geometric_times(cfg.window.0, cfg.window.1, cfg.samples);
    let taus: Vec<f64> = times.iter().map(|&t| map.tau_of(t)).collect::<Result<_, _>>()?;
    let scfg = SolverConfig {
        scheme: Scheme::LinearlyImplicit,
        bc: BoundaryCondition::Reflecting,
        snapshots: taus[..taus.len() - 1].to_vec(),
        drift: cfg.profile.drift,
        ..SolverConfig::default()
    };
    let traj = solver::solve_rescaled(&v0, *taus.last().expect("samples >= 2"), me, &se, &scfg)?;
    let snaps: Vec<&Field> = traj.snapshots.iter().filter(|s| s.time() >= taus[0] - 1e-12).collect();
    if snaps.len() != times.len() {
        return Err(VerifyError::Config("snapshot bookkeeping mismatch".into()));
    }

    let matched_mass = grid::mass(snaps[0]);
    let profile = solve_profile(matched_mass, me, &se, &g, &cfg.profile)?.field;
    let f = profile.values();
    let mut run = Run {
        times: times.clone(),
        c1: Vec::new(),
        c2: Vec::new(),
        err: Vec::new(),
        err_core: Vec::new(),
        dist: [Vec::new(), Vec::new()],
        mass: Vec::new(),
        matched_mass,
    };
    for (snap, &t) in snaps.iter().zip(&times) {
        let v = snap.values();
        let (mut c1, mut c2, mut e, mut ec) = (f64::INFINITY, 0.0f64, 0.0f64, 0.0f64);
        for k in 0..g.len() {
            if f[k] < cfg.clip {
                continue;
            }
            let r = v[k] / f[k];
            c1 = c1.min(r);
            c2 = c2.max(r);
            e = e.max((r - 1.0).abs());
            let y = g.coords(k);
            if (0..d).all(|i| y[i].abs() <= cfg.core_k) {
                ec = ec.max((r - 1.0).abs());
            }
        }
        run.c1.push(c1);
        run.c2.push(c2);
        run.err.push(e);
        run.err_core.push(ec);
        run.mass.push(grid::mass(snap));
        let (u, _) = map.from_selfsimilar(snap)?;
        let (big_u, _) = map.from_selfsimilar(&profile.clone().with_time(snap.time()))?;
        let diff: Vec<f64> = u.values().iter().zip(big_u.values()).map(|(a, b)| a - b).collect();
        for (slot, p) in run.dist.iter_mut().zip([1.0, 2.0]) {
            let norm = grid::lp_norm_signed(u.grid(), &diff, p);
            slot.push(t.powf((p - 1.0) * se.alpha / p) * norm);
        }
    }
    Ok(run)
}

fn header(rep: &mut ExperimentReport, cfg: &RelaxationConfig) {
    rep.param("mass", cfg.mass);
    for i in 0..cfg.half.len() {
        rep.param(&format!("grid.half.{}", i + 1), cfg.half[i]);
        rep.param(&format!("grid.n.{}", i + 1), cfg.n[i] as f64);
    }
    rep.param("window.lo", cfg.window.0);
    rep.param("window.hi", cfg.window.1);
    rep.param("clip", cfg.clip);
    rep.label("frame", "self-similar implicit run, data at t = 1, u / U_M = v / F_M");
}

fn record(rep: &mut ExperimentReport, tag: &str, run: &Run) {
    rep.param(&format!("{tag}.matched_mass"), run.matched_mass);
    rep.series(&format!("{tag}.c1"), &run.times, &run.c1);
    rep.series(&format!("{tag}.c2"), &run.times, &run.c2);
    rep.series(&format!("{tag}.rel_error"), &run.times, &run.err);
    rep.series(&format!("{tag}.rel_error_core"), &run.times, &run.err_core);
}

/// Least-squares slope of log y against log t.
fn log_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let lx: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Two-sided Harnack ratios C1(t) = min u/U_M and C2(t) = max u/U_M on
/// [T, 10T] for clipped bump data, and the exact-slice control.
pub fn exp_ghp(me: &MediumExponents<f64>, cfg: &RelaxationConfig) -> Result<ExperimentReport, VerifyError> {
    let mut rep = ExperimentReport::new("ghp", me.m());
    header(&mut rep, cfg);
    let bump = relax(me, cfg, &cfg.bump)?;
    record(&mut rep, cfg.bump.name(), &bump);
    let ratio: Vec<f64> = bump.c2.iter().zip(&bump.c1).map(|(a, b)| a / b).collect();
    rep.series("bump.c2_over_c1", &bump.times, &ratio);

    let bounded = bump.c1.iter().zip(&bump.c2).all(|(&c1, &c2)| c1 > 0.0 && c1 <= 1.0 && c2 >= 1.0 && c2.is_finite());
    let c1_min = bump.c1.iter().cloned().fold(f64::INFINITY, f64::min);
    let c2_max = bump.c2.iter().cloned().fold(0.0, f64::max);
    rep.verdict("ghp.bounds", bounded, c2_max / c1_min, 1.0, f64::INFINITY, format!("min C1 = {c1_min:.4e}, max C2 = {c2_max:.4e}"));
    let slope = log_slope(&bump.times, &ratio);
    let last_le_first = ratio.last() <= ratio.first();
    rep.verdict(
        "ghp.ratio_trend",
        slope <= 0.0 && last_le_first,
        slope,
        0.0,
        0.0,
        format!("log-log slope of C2/C1; C2/C1 from {:.4e} to {:.4e}", ratio[0], ratio[ratio.len() - 1]),
    );
    let s1 = log_slope(&bump.times, &bump.c1);
    let s2 = log_slope(&bump.times, &bump.c2);
    rep.verdict("ghp.c1_trend", s1 >= 0.0, s1, 0.0, 0.0, "log-log slope of C1 (nondecreasing trend)");
    rep.verdict("ghp.c2_trend", s2 <= 0.0, s2, 0.0, 0.0, "log-log slope of C2 (nonincreasing trend)");

    let exact = relax(me, cfg, &InitialData::ExactSlice)?;
    record(&mut rep, "exact", &exact);
    let dev = exact.c1.iter().chain(&exact.c2).fold(0.0f64, |a, &c| a.max((c - 1.0).abs()));
    rep.verdict("ghp.exact_slice", dev <= cfg.exact_tol, dev, 0.0, cfg.exact_tol, "max |C - 1| over the window");
    Ok(rep)
}

/// Relative error E(t) = sup |u - U_M| / U_M for clipped bump and
/// time-delayed data, globally and on the inner core.
pub fn exp_acre(me: &MediumExponents<f64>, cfg: &RelaxationConfig) -> Result<ExperimentReport, VerifyError> {
    let se = derive_similarity(me);
    let mut rep = ExperimentReport::new("acre", me.m());
    header(&mut rep, cfg);
    rep.param("delay", cfg.delay);
    rep.param("core_k", cfg.core_k);

    let bump = relax(me, cfg, &cfg.bump)?;
    record(&mut rep, cfg.bump.name(), &bump);
    let (e0, e1) = (bump.err[0], bump.err[bump.err.len() - 1]);
    rep.verdict("acre.halving", e1 <= cfg.halving * e0, e1 / e0, cfg.halving, 0.0, format!("E(T) = {e0:.4e}, E(10T) = {e1:.4e}"));
    let (c0, c1) = (bump.err_core[0], bump.err_core[bump.err_core.len() - 1]);
    let core_decay = c1 / c0;
    rep.verdict(
        "acre.core",
        core_decay <= e1 / e0,
        core_decay,
        e1 / e0,
        0.0,
        "E_core(10T)/E_core(T) against the global decay factor",
    );

    let delayed = relax(me, cfg, &InitialData::Delayed { h: cfg.delay })?;
    record(&mut rep, "delayed", &delayed);
    let fit = fit_power_law(&delayed.times, &delayed.err, cfg.window)?;
    rep.fit("delayed.rel_error", fit.clone(), Some(cfg.delayed_rate));
    rep.exponent_verdict("acre.delayed_rate", &fit, cfg.delayed_rate, cfg.delayed_rate_tol);
    // surrogate prediction along the slowest-decaying axis
    let cal = VssCalibration::surrogate(me, Normalization::Certified);
    let imax = (0..me.dim()).fold(0, |b, i| if se.mu[i] > se.mu[b] { i } else { b });
    let mut x = vec![0.0; me.dim()];
    x[imax] = 1.0;
    let predicted: Vec<f64> = delayed
        .times
        .iter()
        .map(|&t| delayed_relative_error(&x, t, cfg.delay, &se, &cal).map(|r| r * cfg.delay))
        .collect::<Result<_, _>>()?;
    rep.series("delayed.surrogate_prediction", &delayed.times, &predicted);
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupConfig {
    pub pairs: usize,
    pub seed: u64,
    pub half: f64,
    pub n: usize,
    pub t_end: f64,
    pub snapshots: usize,
    pub contraction_tol: f64,
    pub order_tol: f64,
    pub mass_tol: f64,
}

impl Default for SemigroupConfig {
    fn default() -> Self {
        SemigroupConfig {
            pairs: 20,
            seed: 20_231_104,
            half: 4.0,
            n: 32,
            t_end: 0.2,
            snapshots: 5,
            contraction_tol: 1e-10,
            order_tol: 1e-12,
            mass_tol: 0.01,
        }
    }
}

/// Lp-rate observables t^((p-1) alpha / p) ||u - U_M||_p for the clipped bump,
/// plus L1 contraction, order preservation and mass conservation on seeded
/// random pairs.
pub fn exp_rates_and_semigroup(
    me: &MediumExponents<f64>,
    cfg: &RelaxationConfig,
    sg: &SemigroupConfig,
) -> Result<ExperimentReport, VerifyError> {
    let mut rep = ExperimentReport::new("rates_and_semigroup", me.m());
    header(&mut rep, cfg);
    rep.param("seed", sg.seed as f64);
    rep.param("pairs", sg.pairs as f64);

    let bump = relax(me, cfg, &cfg.bump)?;
    for (p, series) in [1, 2].iter().zip(&bump.dist) {
        rep.series(&format!("rate.l{p}"), &bump.times, series);
        let worst = series.windows(2).map(|w| w[1] / w[0] - 1.0).fold(f64::NEG_INFINITY, f64::max);
        rep.verdict(&format!("rates.l{p}_decreasing"), worst < 0.0, worst, 0.0, 0.0, "largest relative increase between samples");
    }
    let drift = bump.mass.iter().fold(0.0f64, |a, &m| a.max((m / cfg.mass - 1.0).abs()));
    rep.verdict("semigroup.mass", drift <= sg.mass_tol, drift, 0.0, sg.mass_tol, "relative mass drift of the relaxation run");

    let d = me.dim();
    let g = TensorGrid::cube(d, sg.half, sg.n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sg.seed);
    let step = sg.t_end / sg.snapshots as f64;
    let scfg = SolverConfig {
        bc: BoundaryCondition::Reflecting,
        snapshots: (1..sg.snapshots).map(|k| k as f64 * step).collect(),
        ..SolverConfig::default()
    };
    let (mut contraction, mut order, mut mass) = (f64::NEG_INFINITY, f64::INFINITY, 0.0f64);
    for pair in 0..sg.pairs {
        let ordered = pair % 2 == 0;
        let u0: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(0.2..1.2)).collect();
        let v0: Vec<f64> = if ordered {
            u0.iter().map(|&u| u + rng.gen_range(0.0..0.5)).collect()
        } else {
            (0..g.len()).map(|_| rng.gen_range(0.2..1.2)).collect()
        };
        let u0 = ScalarField::new(g.clone(), u0, 0.0)?;
        let v0 = ScalarField::new(g.clone(), v0, 0.0)?;
        let l1 = |a: &Field, b: &Field| {
            let diff: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
            grid::lp_norm_signed(&g, &diff, 1.0)
        };
        let d0 = l1(&u0, &v0);
        let m0 = grid::mass(&u0);
        for (u, v) in solver::solve_pair(&u0, &v0, sg.t_end, me, &scfg)?.iter().skip(1) {
            contraction = contraction.max(l1(u, v) - d0);
            mass = mass.max((grid::mass(u) / m0 - 1.0).abs());
            if ordered {
                let gap = v.values().iter().zip(u.values()).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min);
                order = order.min(gap);
            }
        }
    }
    rep.verdict(
        "semigroup.contraction",
        contraction <= sg.contraction_tol,
        contraction,
        0.0,
        sg.contraction_tol,
        "max over pairs and snapshots of ||S u0 - S v0||_1 - ||u0 - v0||_1",
    );
    rep.verdict("semigroup.order", order >= -sg.order_tol, order, 0.0, sg.order_tol, "min over ordered pairs of S v0 - S u0");
    rep.verdict("semigroup.pair_mass", mass <= 1e-10, mass, 0.0, 1e-10, "reflecting walls, explicit scheme");
    Ok(rep)
}
