//! Steady profiles F_M of the rescaled equation by pseudo-transient Newton
//! continuation on the positive orthant.

use super::sparse::{self, Coefficient, Lattice, Operator, Side, SparseLu};
use super::{DriftScheme, SolverError};
use crate::grid::{ScalarField, TensorGrid};
use crate::similarity::{MediumExponents, SimilarityExponents};
use crate::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileConfig<T> {
    /// Bound on ||dF/dtau||_1 / ||F||_1 at the returned state.
    pub steady_tol: T,
    pub max_iters: usize,
    pub drift: DriftScheme,
    /// Initial pseudo-time step and its cap.
    pub dt0: T,
    pub dt_max: T,
    /// Width of the initial bump as a fraction of each half-extent.
    pub init_width: T,
}

impl<T: Real> Default for ProfileConfig<T> {
    fn default() -> Self {
        ProfileConfig {
            steady_tol: T::lit(1e-4),
            max_iters: 500,
            drift: DriftScheme::Hybrid,
            dt0: T::lit(1e-3),
            dt_max: T::lit(1e8),
            init_width: T::lit(0.125),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Profile<T> {
    pub field: ScalarField<T>,
    pub iterations: usize,
    /// ||G(F)||_1 / ||F||_1, the L1 increment per unit rescaled time.
    pub rate: T,
    pub mass: T,
}

fn orthant_lattice<T: Real>(g: &TensorGrid<T>) -> Lattice {
    Lattice {
        n: g.n().iter().map(|&n| n / 2).collect(),
        h: (0..g.dim()).map(|i| g.h(i).as_f64()).collect(),
        lo: vec![0.0; g.dim()],
    }
}

/// Expands orthant values (cells with y_i > 0) to the full symmetric grid.
pub fn mirror_orthant<T: Real>(g: &TensorGrid<T>, quarter: &[T]) -> Vec<T> {
    let d = g.dim();
    let half: Vec<usize> = g.n().iter().map(|&n| n / 2).collect();
    let qstride: Vec<usize> = (0..d).map(|i| half[i + 1..].iter().product()).collect();
    (0..g.len())
        .map(|k| {
            let idx = g.unflat(k);
            let q = (0..d).fold(0, |acc, i| {
                let j = idx[i];
                let jq = if j >= half[i] { j - half[i] } else { half[i] - 1 - j };
                acc + jq * qstride[i]
            });
            quarter[q]
        })
        .collect()
}

/// Steady state of the rescaled equation with mass `mass` and zero-flux walls
/// on `grid`. The solve runs on the positive orthant with a zero-flux face at
/// y_i = 0, which is exact for separately symmetric states, and the result is
/// mirrored.
pub fn solve_profile<T: Real>(
    mass: T,
    me: &MediumExponents<T>,
    se: &SimilarityExponents<T>,
    grid: &TensorGrid<T>,
    cfg: &ProfileConfig<T>,
) -> Result<Profile<T>, SolverError> {
    if grid.dim() != me.dim() {
        return Err(SolverError::Dimension { field: grid.dim(), exponents: me.dim() });
    }
    if !(mass > T::zero()) {
        return Err(SolverError::Config(format!("mass {mass} must be positive")));
    }
    let lat = orthant_lattice(grid);
    let n = lat.len();
    let m: Vec<f64> = me.m().iter().map(|v| v.as_f64()).collect();
    let c: Vec<f64> = se.drift().iter().map(|v| v.as_f64()).collect();
    let op = Operator { lat: &lat, m: &m, c: &c, drift: cfg.drift, low: Side::Wall, high: Side::Wall };
    let dv = lat.cell_volume();
    let orthant_mass = mass.as_f64() / f64::powi(2.0, grid.dim() as i32);

    let widths: Vec<f64> = grid.half().iter().map(|&l| (l * cfg.init_width).as_f64()).collect();
    let mut f: Vec<f64> = (0..n)
        .map(|k| {
            let x = lat.coords(k);
            let r2: f64 = x.iter().zip(&widths).map(|(xi, w)| (xi / w) * (xi / w)).sum();
            (-r2).exp().max(1e-300)
        })
        .collect();
    let total: f64 = crate::real::pairwise_sum(&f) * dv;
    for v in f.iter_mut() {
        *v *= orthant_mass / total;
    }

    let mut lu = SparseLu::default();
    let mut dt = cfg.dt0.as_f64();
    let dt_max = cfg.dt_max.as_f64();
    let mut iterations = 0;
    let (mut best, mut stalled) = (f64::INFINITY, 0);
    loop {
        if iterations >= cfg.max_iters {
            let rate = rate_of(&op, &f);
            return Err(SolverError::NotConverged { iterations, rate });
        }
        iterations += 1;
        let g = op.residual(&f);
        let (jac, _) = op.assemble(&f, Coefficient::Jacobian, None);
        let mat = sparse::shifted(&jac, n, 1.0 / dt, 1.0);
        let delta = lu.solve(n, &mat, &g)?;
        let next: Vec<f64> = f.iter().zip(&delta).map(|(a, b)| a + b).collect();
        if next.iter().any(|&v| !(v > 0.0)) {
            dt *= 0.25;
            if dt < 1e-14 {
                return Err(SolverError::Numerical("pseudo-time step underflow in profile solve".into()));
            }
            continue;
        }
        let rel = delta.iter().zip(&f).fold(0.0f64, |a, (d, v)| a.max((d / v).abs()));
        f = next;
        dt = (2.0 * dt).min(dt_max);
        if dt > 1e4 {
            if rel < 1e-10 {
                break;
            }
            // far-tail cells keep moving at roundoff level; stop once the
            // residual rate is tiny and no longer improving
            let rate = rate_of(&op, &f);
            if rate < 0.5 * best {
                best = rate;
                stalled = 0;
            } else {
                stalled += 1;
            }
            if best < 1e-6 * cfg.steady_tol.as_f64() && stalled >= 5 {
                break;
            }
        }
    }
    let rate = rate_of(&op, &f);
    if !(rate <= cfg.steady_tol.as_f64()) {
        return Err(SolverError::NotConverged { iterations, rate });
    }
    let quarter: Vec<T> = f.into_iter().map(T::lit).collect();
    let values = mirror_orthant(grid, &quarter);
    let field = ScalarField::new(grid.clone(), values, T::zero())?;
    let mass = crate::grid::mass(&field);
    Ok(Profile { field, iterations, rate: T::lit(rate), mass })
}

fn rate_of(op: &Operator<'_>, f: &[f64]) -> f64 {
    let g = op.residual(f);
    let gn: f64 = crate::real::pairwise_sum_by(g.len(), &|k| g[k].abs());
    let fnorm: f64 = crate::real::pairwise_sum(f);
    gn / fnorm
}
