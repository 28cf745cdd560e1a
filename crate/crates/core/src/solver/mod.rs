//! Time steppers for the physical and rescaled equations, the Cauchy driver
//! and the steady-profile solver.

mod profile;
pub(crate) mod sparse;

pub use profile::{mirror_orthant, solve_profile, Profile, ProfileConfig};

use crate::grid::{self, Ghost, GridError, ScalarField, TensorGrid};
use crate::similarity::{MediumExponents, SimilarityExponents};
use crate::Real;
use sparse::{Coefficient, Lattice, Operator, Side, SparseLu};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("diffusivity unbounded: floor is zero and cell {0} is empty")]
    UnboundedDiffusivity(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("maximum step count {0} exceeded")]
    MaxSteps(usize),
    #[error("steady state not reached after {iterations} iterations (rate {rate:e})")]
    NotConverged { iterations: usize, rate: f64 },
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("field dimension {field} does not match exponent dimension {exponents}")]
    Dimension { field: usize, exponents: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Explicit,
    LinearlyImplicit,
}

/// Face value of the drift flux in the implicit and Newton solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftScheme {
    /// Donor cell.
    Upwind,
    /// Central average where the cell Peclet number is at most 1, donor cell
    /// elsewhere.
    #[default]
    Hybrid,
}

/// Floor on u used when evaluating the diffusivity m u^(m-1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Floor<T> {
    Absolute(T),
    /// Fraction of the initial sup-norm.
    Relative(T),
}

impl<T: Real> Floor<T> {
    pub fn resolve(&self, sup0: T) -> T {
        match *self {
            Floor::Absolute(e) => e,
            Floor::Relative(r) => r * sup0,
        }
    }
}

/// Exterior values (x, t) -> u used by barrier-Dirichlet boundaries.
pub type Sampler<T> = Arc<dyn Fn(&[T], T) -> T + Send + Sync>;

#[derive(Clone)]
pub enum BoundaryCondition<T> {
    ZeroDirichlet,
    BarrierDirichlet(Sampler<T>),
    Reflecting,
}

impl<T> fmt::Debug for BoundaryCondition<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryCondition::ZeroDirichlet => write!(f, "ZeroDirichlet"),
            BoundaryCondition::BarrierDirichlet(_) => write!(f, "BarrierDirichlet(..)"),
            BoundaryCondition::Reflecting => write!(f, "Reflecting"),
        }
    }
}

/// Step-size policy of the linearly implicit scheme: dt starts at `initial`
/// and grows geometrically up to `max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitSteps<T> {
    pub initial: T,
    pub growth: T,
    pub max: T,
}

#[derive(Debug, Clone)]
pub struct SolverConfig<T> {
    pub scheme: Scheme,
    pub floor: Floor<T>,
    pub theta: T,
    pub bc: BoundaryCondition<T>,
    pub snapshots: Vec<T>,
    pub steady_tol: T,
    pub max_steps: usize,
    pub drift: DriftScheme,
    pub implicit: ImplicitSteps<T>,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        SolverConfig {
            scheme: Scheme::Explicit,
            floor: Floor::Relative(T::lit(1e-8)),
            theta: T::lit(0.9),
            bc: BoundaryCondition::Reflecting,
            snapshots: Vec::new(),
            steady_tol: T::lit(1e-4),
            max_steps: 2_000_000,
            drift: DriftScheme::Hybrid,
            implicit: ImplicitSteps { initial: T::lit(1e-3), growth: T::lit(1.1), max: T::lit(0.05) },
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.theta > T::zero() && self.theta <= T::one()) {
            return Err(SolverError::Config(format!("theta = {} must lie in (0, 1]", self.theta)));
        }
        let eps = match self.floor {
            Floor::Absolute(e) | Floor::Relative(e) => e,
        };
        if !(eps >= T::zero()) {
            return Err(SolverError::Config(format!("floor {eps} must be nonnegative")));
        }
        if self.snapshots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SolverError::Config("snapshot times must be strictly increasing".into()));
        }
        let im = self.implicit;
        if !(im.initial > T::zero() && im.growth >= T::one() && im.max >= im.initial) {
            return Err(SolverError::Config("implicit steps need 0 < initial <= max and growth >= 1".into()));
        }
        Ok(())
    }
}

fn check_dim<T: Real>(u: &ScalarField<T>, me: &MediumExponents<T>) -> Result<(), SolverError> {
    if u.grid().dim() != me.dim() {
        return Err(SolverError::Dimension { field: u.grid().dim(), exponents: me.dim() });
    }
    Ok(())
}

/// Thread count of the sparse factorizations. 1 is sequential and
/// bit-reproducible; 0 uses every available core. Applies process-wide.
pub fn set_threads(n: usize) {
    faer::set_global_parallelism(if n == 1 { faer::Par::Seq } else { faer::Par::rayon(n) });
}

/// Largest m_i max(u, eps)^(m_i - 1) per axis.
fn diffusivity_bounds<T: Real>(u: &ScalarField<T>, me: &MediumExponents<T>, eps: T) -> Result<Vec<T>, SolverError> {
    let umin = u.values().iter().fold(T::infinity(), |a, &b| a.min(b));
    let lo = umin.max(eps);
    if !(lo > T::zero()) {
        let k = u.values().iter().position(|&v| v <= T::zero()).unwrap_or(0);
        return Err(SolverError::UnboundedDiffusivity(k));
    }
    Ok(me.m().iter().map(|&m| m * lo.powf(m - T::one())).collect())
}

fn stable_dt_with<T: Real>(u: &ScalarField<T>, me: &MediumExponents<T>, theta: T, eps: T) -> Result<T, SolverError> {
    let s = diffusivity_bounds(u, me, eps)?;
    let g = u.grid();
    let rate = (0..g.dim()).fold(T::zero(), |acc, i| acc + s[i] / (g.h(i) * g.h(i)));
    Ok(theta / (T::lit(2.0) * rate))
}

/// theta / (2 sum_i s_i / h_i^2) with s_i = max_cells m_i max(u, eps)^(m_i-1);
/// the floor is resolved against the sup-norm of `u`.
pub fn stable_dt<T: Real>(u: &ScalarField<T>, me: &MediumExponents<T>, cfg: &SolverConfig<T>) -> Result<T, SolverError> {
    check_dim(u, me)?;
    let eps = cfg.floor.resolve(grid::sup_norm(u));
    stable_dt_with(u, me, cfg.theta, eps)
}

fn stable_dtau_with<T: Real>(
    v: &ScalarField<T>,
    me: &MediumExponents<T>,
    se: &SimilarityExponents<T>,
    theta: T,
    eps: T,
) -> Result<T, SolverError> {
    let s = diffusivity_bounds(v, me, eps)?;
    let g = v.grid();
    let mut rate = T::zero();
    for i in 0..g.dim() {
        let h = g.h(i);
        let c = se.alpha * se.sigma[i];
        rate += T::lit(2.0) * s[i] / (h * h) + c * g.half()[i] / h;
    }
    Ok(theta / rate)
}

/// Combined diffusive and upwind bound for the explicit rescaled step.
pub fn stable_dtau<T: Real>(
    v: &ScalarField<T>,
    me: &MediumExponents<T>,
    se: &SimilarityExponents<T>,
    cfg: &SolverConfig<T>,
) -> Result<T, SolverError> {
    check_dim(v, me)?;
    let eps = cfg.floor.resolve(grid::sup_norm(v));
    stable_dtau_with(v, me, se, cfg.theta, eps)
}

/// Rejects NaN and clamps negative round-off; a genuinely negative value is a
/// numerical failure.
fn finish<T: Real>(g: &TensorGrid<T>, mut vals: Vec<T>, time: T) -> Result<ScalarField<T>, SolverError> {
    let sup = vals.iter().fold(T::zero(), |a, &b| a.max(b));
    let tol = T::lit(1e-12) * sup;
    for (k, v) in vals.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(SolverError::Numerical(format!("non-finite value at cell {k}")));
        }
        if *v < T::zero() {
            if -*v > tol {
                return Err(SolverError::Numerical(format!("negative value {v} at cell {k}")));
            }
            *v = T::zero();
        }
    }
    Ok(ScalarField::from_parts(g.clone(), vals, time))
}

/// Adds sum_i D_i(u^m_i) to `acc`, with boundary values from `bc` at `time`.
fn add_diffusion<T: Real>(u: &ScalarField<T>, me: &MediumExponents<T>, bc: &BoundaryCondition<T>, time: T, acc: &mut [T]) {
    let g = u.grid();
    for (i, &m) in me.m().iter().enumerate() {
        let w: Vec<T> = u.values().iter().map(|&x| x.powf(m)).collect();
        let d = match bc {
            BoundaryCondition::ZeroDirichlet => grid::second_difference(g, &w, i, &Ghost::Zero),
            BoundaryCondition::Reflecting => grid::second_difference(g, &w, i, &Ghost::Mirror),
            BoundaryCondition::BarrierDirichlet(s) => {
                let f = |x: &[T]| s(x, time).max(T::zero()).powf(m);
                grid::second_difference(g, &w, i, &Ghost::Exterior(&f))
            }
        };
        for (a, b) in acc.iter_mut().zip(d) {
            *a += b;
        }
    }
}

/// Explicit step u + dt sum_i D_i(u^m_i).
pub fn step_physical<T: Real>(
    u: &ScalarField<T>,
    dt: T,
    me: &MediumExponents<T>,
    cfg: &SolverConfig<T>,
) -> Result<ScalarField<T>, SolverError> {
    check_dim(u, me)?;
    let mut rhs = vec![T::zero(); u.values().len()];
    add_diffusion(u, me, &cfg.bc, u.time(), &mut rhs);
    let vals: Vec<T> = u.values().iter().zip(&rhs).map(|(&a, &r)| a + dt * r).collect();
    let sup = vals.iter().fold(T::zero(), |a, &b| a.max(b));
    if vals.iter().any(|&v| v < -T::lit(1e-12) * sup) {
        // the bound on dt uses the derivative m u^(m-1), but a cell drains at
        // the chord rate u^(m-1), up to 1/m faster, so fronts can undershoot
        return finish(u.grid(), limited_diffusion(u, dt, me, &cfg.bc), u.time() + dt);
    }
    finish(u.grid(), vals, u.time() + dt)
}

/// Explicit diffusion step with every face flux scaled by the outflow limiter
/// of its donor cell, so that no cell loses more than it holds. Interior
/// faces keep one flux for both cells and mass is conserved.
fn limited_diffusion<T: Real>(u: &ScalarField<T>, dt: T, me: &MediumExponents<T>, bc: &BoundaryCondition<T>) -> Vec<T> {
    let g = u.grid();
    let v = u.values();
    let time = u.time();
    let ws: Vec<Vec<T>> = me.m().iter().map(|&m| v.iter().map(|&x| x.powf(m)).collect()).collect();
    // (neighbor w, neighbor cell) per face; None is a zero-flux face
    let neighbor = |axis: usize, k: usize, side: i32| -> Option<(T, Option<usize>)> {
        let j = g.axis_index(k, axis);
        let s = g.stride(axis);
        let m = me.m()[axis];
        let inside = if side < 0 { j > 0 } else { j + 1 < g.n()[axis] };
        if inside {
            let kn = if side < 0 { k - s } else { k + s };
            return Some((ws[axis][kn], Some(kn)));
        }
        match bc {
            BoundaryCondition::Reflecting => None,
            BoundaryCondition::ZeroDirichlet => Some((T::zero(), None)),
            BoundaryCondition::BarrierDirichlet(f) => {
                let mut x = g.coords(k);
                x[axis] += if side < 0 { -g.h(axis) } else { g.h(axis) };
                Some((f(&x[..g.dim()], time).max(T::zero()).powf(m), None))
            }
        }
    };
    let mut ratio = vec![T::one(); v.len()];
    for (k, r) in ratio.iter_mut().enumerate() {
        let mut out = T::zero();
        for axis in 0..g.dim() {
            let h2 = g.h(axis) * g.h(axis);
            for side in [-1, 1] {
                if let Some((wn, _)) = neighbor(axis, k, side) {
                    out += (ws[axis][k] - wn).max(T::zero()) / h2;
                }
            }
        }
        if dt * out > v[k] {
            *r = v[k] / (dt * out);
        }
    }
    (0..v.len())
        .map(|k| {
            let mut rate = T::zero();
            for axis in 0..g.dim() {
                let h2 = g.h(axis) * g.h(axis);
                for side in [-1, 1] {
                    if let Some((wn, kn)) = neighbor(axis, k, side) {
                        let diff = wn - ws[axis][k];
                        let donor = if diff < T::zero() { ratio[k] } else { kn.map_or(T::one(), |n| ratio[n]) };
                        rate += donor * diff / h2;
                    }
                }
            }
            (v[k] + dt * rate).max(T::zero())
        })
        .collect()
}

/// Explicit step of the rescaled equation with donor-cell drift. A barrier
/// sampler is evaluated in (y, tau).
pub fn step_rescaled<T: Real>(
    v: &ScalarField<T>,
    dtau: T,
    me: &MediumExponents<T>,
    se: &SimilarityExponents<T>,
    cfg: &SolverConfig<T>,
) -> Result<ScalarField<T>, SolverError> {
    check_dim(v, me)?;
    let g = v.grid();
    let mut rhs = vec![T::zero(); v.values().len()];
    add_diffusion(v, me, &cfg.bc, v.time(), &mut rhs);
    for i in 0..g.dim() {
        let c = se.alpha * se.sigma[i];
        let d = match &cfg.bc {
            BoundaryCondition::ZeroDirichlet => grid::upwind_drift_divergence(g, v.values(), i, c, &Ghost::Zero),
            BoundaryCondition::Reflecting => grid::upwind_drift_divergence(g, v.values(), i, c, &Ghost::Mirror),
            BoundaryCondition::BarrierDirichlet(s) => {
                let t = v.time();
                let f = |x: &[T]| s(x, t).max(T::zero());
                grid::upwind_drift_divergence(g, v.values(), i, c, &Ghost::Exterior(&f))
            }
        };
        for (a, b) in rhs.iter_mut().zip(d) {
            *a += b;
        }
    }
    let vals = v.values().iter().zip(&rhs).map(|(&a, &r)| a + dtau * r).collect();
    finish(g, vals, v.time() + dtau)
}

fn lattice_of<T: Real>(g: &TensorGrid<T>) -> Lattice {
    Lattice {
        n: g.n().to_vec(),
        h: (0..g.dim()).map(|i| g.h(i).as_f64()).collect(),
        lo: g.half().iter().map(|&l| -l.as_f64()).collect(),
    }
}

/// Linearly implicit (lagged diffusivity) stepper on the full grid. One
/// coupled sparse solve per step:
/// (I - dt (sum_i D_i diag(max(u, eps)^(m_i - 1)) + A)) u' = u + dt b.
pub struct ImplicitStepper<T> {
    lat: Lattice,
    m: Vec<f64>,
    c: Vec<f64>,
    drift: DriftScheme,
    bc: BoundaryCondition<T>,
    lu: SparseLu,
}

impl<T: Real> ImplicitStepper<T> {
    /// Stepper for the physical equation (no drift).
    pub fn physical(g: &TensorGrid<T>, me: &MediumExponents<T>, cfg: &SolverConfig<T>) -> Self {
        Self::build(g, me, vec![0.0; g.dim()], cfg)
    }

    /// Stepper for the rescaled equation.
    pub fn rescaled(g: &TensorGrid<T>, me: &MediumExponents<T>, se: &SimilarityExponents<T>, cfg: &SolverConfig<T>) -> Self {
        let c = se.drift().iter().map(|c| c.as_f64()).collect();
        Self::build(g, me, c, cfg)
    }

    fn build(g: &TensorGrid<T>, me: &MediumExponents<T>, c: Vec<f64>, cfg: &SolverConfig<T>) -> Self {
        ImplicitStepper {
            lat: lattice_of(g),
            m: me.m().iter().map(|m| m.as_f64()).collect(),
            c,
            drift: cfg.drift,
            bc: cfg.bc.clone(),
            lu: SparseLu::default(),
        }
    }

    pub fn step(&mut self, u: &ScalarField<T>, dt: T, eps: T) -> Result<ScalarField<T>, SolverError> {
        let side = match self.bc {
            BoundaryCondition::Reflecting => Side::Wall,
            _ => Side::Dirichlet,
        };
        let op = Operator { lat: &self.lat, m: &self.m, c: &self.c, drift: self.drift, low: side, high: side };
        let state: Vec<f64> = u.values().iter().map(|v| v.as_f64()).collect();
        let t_new = u.time() + dt;
        let sampler = match &self.bc {
            BoundaryCondition::BarrierDirichlet(s) => Some(s.clone()),
            _ => None,
        };
        let ghost_fn = sampler.map(|s| {
            move |x: &[f64]| -> f64 {
                let xt: Vec<T> = x.iter().map(|&v| T::lit(v)).collect();
                s(&xt, t_new).as_f64()
            }
        });
        let ghost: Option<&dyn Fn(&[f64]) -> f64> = ghost_fn.as_ref().map(|f| f as &dyn Fn(&[f64]) -> f64);
        let (trip, b) = op.assemble(&state, Coefficient::Lagged { eps: eps.as_f64() }, ghost);
        let n = state.len();
        let dtf = dt.as_f64();
        let mat = sparse::shifted(&trip, n, 1.0, dtf);
        let rhs: Vec<f64> = state.iter().zip(&b).map(|(&u, &bb)| u + dtf * bb).collect();
        let x = self.lu.solve(n, &mat, &rhs)?;
        finish(u.grid(), x.into_iter().map(T::lit).collect(), t_new)
    }
}

/// Time-ordered snapshots and per-step diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub snapshots: Vec<ScalarField<T>>,
    pub times: Vec<T>,
    pub mass: Vec<T>,
    pub sup: Vec<T>,
    /// Per axis: accumulated time integral of the energy int |d_i u^m_i|^2.
    pub energy: Vec<Vec<T>>,
    /// Per axis: int u^(m_i + 1) / (m_i + 1).
    pub potential: Vec<Vec<T>>,
    pub steps: Vec<T>,
    pub floor: T,
}

impl<T: Real> Trajectory<T> {
    fn new(u0: &ScalarField<T>, me: &MediumExponents<T>, floor: T) -> Self {
        let d = me.dim();
        let mut tr = Trajectory {
            snapshots: vec![u0.clone()],
            times: Vec::new(),
            mass: Vec::new(),
            sup: Vec::new(),
            energy: vec![Vec::new(); d],
            potential: vec![Vec::new(); d],
            steps: Vec::new(),
            floor,
        };
        tr.record(u0, me, T::zero());
        tr
    }

    fn record(&mut self, u: &ScalarField<T>, me: &MediumExponents<T>, dt: T) {
        self.times.push(u.time());
        self.mass.push(grid::mass(u));
        self.sup.push(grid::sup_norm(u));
        let g = u.grid();
        for (i, &m) in me.m().iter().enumerate() {
            let e = axis_energy(u, i, m);
            let prev = self.energy[i].last().copied().unwrap_or(T::zero());
            self.energy[i].push(prev + dt * e);
            let p: Vec<T> = u.values().iter().map(|&x| x.powf(m + T::one()) / (m + T::one())).collect();
            self.potential[i].push(crate::real::pairwise_sum(&p) * g.cell_volume());
        }
        if dt > T::zero() {
            self.steps.push(dt);
        }
    }

    pub fn last(&self) -> &ScalarField<T> {
        self.snapshots.last().expect("trajectory holds the initial state")
    }

    /// Mass lost through the boundary, relative to the initial mass.
    pub fn relative_mass_drift(&self) -> T {
        let m0 = self.mass[0];
        let m1 = *self.mass.last().expect("nonempty");
        if m0 == T::zero() {
            m1.abs()
        } else {
            ((m1 - m0) / m0).abs()
        }
    }
}

/// int |d_i u^m|^2 dx from forward differences across interior faces.
pub fn axis_energy<T: Real>(u: &ScalarField<T>, axis: usize, m: T) -> T {
    let g = u.grid();
    let n = g.n()[axis];
    let s = g.stride(axis);
    let h = g.h(axis);
    let vals = u.values();
    let terms: Vec<T> = (0..vals.len())
        .map(|k| {
            if g.axis_index(k, axis) + 1 < n {
                let d = (vals[k + s].powf(m) - vals[k].powf(m)) / h;
                d * d
            } else {
                T::zero()
            }
        })
        .collect();
    crate::real::pairwise_sum(&terms) * g.cell_volume()
}

/// Steps `u0` to `t_end`, landing exactly on every snapshot time.
fn drive<T: Real>(
    u0: &ScalarField<T>,
    t_end: T,
    me: &MediumExponents<T>,
    cfg: &SolverConfig<T>,
    eps: T,
    mut next_dt: impl FnMut(&ScalarField<T>, T) -> Result<T, SolverError>,
    mut advance: impl FnMut(&ScalarField<T>, T) -> Result<ScalarField<T>, SolverError>,
) -> Result<Trajectory<T>, SolverError> {
    cfg.validate()?;
    check_dim(u0, me)?;
    let mut tr = Trajectory::new(u0, me, eps);
    let mut targets: Vec<T> = cfg.snapshots.iter().copied().filter(|&s| s > u0.time() && s < t_end).collect();
    targets.push(t_end);
    let mut u = u0.clone();
    let mut prev = T::zero();
    let mut steps = 0usize;
    for target in targets {
        while u.time() < target {
            if steps >= cfg.max_steps {
                return Err(SolverError::MaxSteps(cfg.max_steps));
            }
            let mut dt = next_dt(&u, prev)?;
            let remaining = target - u.time();
            let land = dt >= remaining || remaining - dt < T::lit(1e-12) * target.abs().max(T::one());
            if land {
                dt = remaining;
            }
            let mut next = advance(&u, dt)?;
            if land {
                next = next.with_time(target);
            }
            tr.record(&next, me, dt);
            prev = dt;
            u = next;
            steps += 1;
        }
        tr.snapshots.push(u.clone());
    }
    Ok(tr)
}

fn implicit_dt<T: Real>(cfg: &SolverConfig<T>, prev: T) -> T {
    let im = cfg.implicit;
    if prev == T::zero() {
        im.initial
    } else {
        (prev * im.growth).min(im.max)
    }
}

/// Physical Cauchy problem on the grid of `u0`, from `u0.time()` to `t_end`.
pub fn solve_cauchy<T: Real>(
    u0: &ScalarField<T>,
    t_end: T,
    me: &MediumExponents<T>,
    cfg: &SolverConfig<T>,
) -> Result<Trajectory<T>, SolverError> {
    let eps = cfg.floor.resolve(grid::sup_norm(u0));
    if grid::sup_norm(u0) == T::zero() {
        return drive(u0, t_end, me, cfg, eps, |_, _| Ok(t_end), |u, dt| Ok(u.clone().with_time(u.time() + dt)));
    }
    match cfg.scheme {
        Scheme::Explicit => drive(
            u0,
            t_end,
            me,
            cfg,
            eps,
            |u, _| stable_dt_with(u, me, cfg.theta, eps),
            |u, dt| step_physical(u, dt, me, cfg),
        ),
        Scheme::LinearlyImplicit => {
            let mut st = ImplicitStepper::physical(u0.grid(), me, cfg);
            drive(u0, t_end, me, cfg, eps, |_, prev| Ok(implicit_dt(cfg, prev)), |u, dt| st.step(u, dt, eps))
        }
    }
}

/// Rescaled evolution from `v0` (stamped with tau) to `tau_end`.
pub fn solve_rescaled<T: Real>(
    v0: &ScalarField<T>,
    tau_end: T,
    me: &MediumExponents<T>,
    se: &SimilarityExponents<T>,
    cfg: &SolverConfig<T>,
) -> Result<Trajectory<T>, SolverError> {
    let eps = cfg.floor.resolve(grid::sup_norm(v0));
    if grid::sup_norm(v0) == T::zero() {
        return drive(v0, tau_end, me, cfg, eps, |_, _| Ok(tau_end), |u, dt| Ok(u.clone().with_time(u.time() + dt)));
    }
    match cfg.scheme {
        Scheme::Explicit => drive(
            v0,
            tau_end,
            me,
            cfg,
            eps,
            |v, _| stable_dtau_with(v, me, se, cfg.theta, eps),
            |v, dt| step_rescaled(v, dt, me, se, cfg),
        ),
        Scheme::LinearlyImplicit => {
            let mut st = ImplicitStepper::rescaled(v0.grid(), me, se, cfg);
            drive(v0, tau_end, me, cfg, eps, |_, prev| Ok(implicit_dt(cfg, prev)), |v, dt| st.step(v, dt, eps))
        }
    }
}

/// Steps two states with a common explicit dt (the smaller stable step) so
/// that comparison and contraction can be checked pairwise.
pub fn solve_pair<T: Real>(
    u0: &ScalarField<T>,
    v0: &ScalarField<T>,
    t_end: T,
    me: &MediumExponents<T>,
    cfg: &SolverConfig<T>,
) -> Result<Vec<(ScalarField<T>, ScalarField<T>)>, SolverError> {
    cfg.validate()?;
    let eps = cfg.floor.resolve(grid::sup_norm(u0).max(grid::sup_norm(v0)));
    let mut targets: Vec<T> = cfg.snapshots.iter().copied().filter(|&s| s > u0.time() && s < t_end).collect();
    targets.push(t_end);
    let (mut u, mut v) = (u0.clone(), v0.clone());
    let mut out = vec![(u.clone(), v.clone())];
    let mut steps = 0;
    for target in targets {
        while u.time() < target {
            if steps >= cfg.max_steps {
                return Err(SolverError::MaxSteps(cfg.max_steps));
            }
            let dt = stable_dt_with(&u, me, cfg.theta, eps)?.min(stable_dt_with(&v, me, cfg.theta, eps)?);
            let remaining = target - u.time();
            let land = dt >= remaining;
            let dt = dt.min(remaining);
            u = step_physical(&u, dt, me, cfg)?;
            v = step_physical(&v, dt, me, cfg)?;
            if land {
                u = u.with_time(target);
                v = v.with_time(target);
            }
            steps += 1;
        }
        out.push((u.clone(), v.clone()));
    }
    Ok(out)
}
