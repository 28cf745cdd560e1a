//! Local mass control with flat product test functions: the Y_i functionals,
//! the mass ODE bound and its check against solver trajectories.

use crate::fit::{fit_power_law, PowerLawFit};
use crate::grid::{AxisBox, ScalarField};
use crate::similarity::MediumExponents;
use crate::solver::Trajectory;
use crate::Real;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocalMassError {
    #[error("axis {axis}: k = {k} violates k >= 2 and k (1 - m) > 1 (m = {m})")]
    Integrability { axis: usize, k: f64, m: f64 },
    #[error("quadrature did not converge on axis {axis}: resolutions differ by {rel:e}")]
    Quadrature { axis: usize, rel: f64 },
    #[error("probe has dimension {probe}, exponents {exponents}")]
    Dimension { probe: usize, exponents: usize },
    #[error("local mass {x:e} exceeds the ODE bound {bound:e} at t = {t}")]
    BoundViolated { t: f64, x: f64, bound: f64 },
}

/// Flat bump phi(x) = prod_i (4 t_i (1 - t_i))^k_i, t_i = (x_i - a_i)/L_i.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump<T> {
    pub bx: AxisBox<T>,
    pub k: Vec<T>,
}

impl<T: Real> Bump<T> {
    fn local(&self, axis: usize, x: T) -> Option<T> {
        let l = self.bx.length(axis);
        let t = (x - self.bx.lo[axis]) / l;
        (t > T::zero() && t < T::one()).then_some(t)
    }

    /// phi_i along one axis.
    pub fn factor(&self, axis: usize, x: T) -> T {
        match self.local(axis, x) {
            Some(t) => (T::lit(4.0) * t * (T::one() - t)).powf(self.k[axis]),
            None => T::zero(),
        }
    }

    /// Second derivative of phi_i along one axis.
    pub fn factor_dd(&self, axis: usize, x: T) -> T {
        let Some(t) = self.local(axis, x) else { return T::zero() };
        let l = self.bx.length(axis);
        qk_dd(t, self.k[axis]) / (l * l)
    }

    pub fn eval(&self, x: &[T]) -> T {
        (0..self.bx.dim()).fold(T::one(), |p, i| p * self.factor(i, x[i]))
    }

    /// d^2 phi / dx_i^2.
    pub fn dd(&self, x: &[T], axis: usize) -> T {
        (0..self.bx.dim()).fold(T::one(), |p, j| {
            p * if j == axis { self.factor_dd(j, x[j]) } else { self.factor(j, x[j]) }
        })
    }
}

/// d^2/dt^2 of (4t(1-t))^k.
fn qk_dd<T: Real>(t: T, k: T) -> T {
    let q = T::lit(4.0) * t * (T::one() - t);
    let dq = T::lit(4.0) * (T::one() - T::lit(2.0) * t);
    let ddq = T::lit(-8.0);
    k * q.powf(k - T::lit(2.0)) * ((k - T::one()) * dq * dq + q * ddq)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalMassProbe<T> {
    pub bump: Bump<T>,
    pub y: Vec<T>,
    pub volume: T,
}

/// Default flatness exponent max(2, ceil(2/(1-m)) + 1).
pub fn default_flatness<T: Real>(m: T) -> T {
    (T::lit(2.0) / (T::one() - m)).ceil().add(T::one()).max(T::lit(2.0))
}

/// Builds the bump on `bx` and computes its Y_i.
pub fn build_bump<T: Real>(bx: AxisBox<T>, k: Vec<T>, me: &MediumExponents<T>) -> Result<LocalMassProbe<T>, LocalMassError> {
    if bx.dim() != me.dim() || k.len() != me.dim() {
        return Err(LocalMassError::Dimension { probe: bx.dim(), exponents: me.dim() });
    }
    for (i, (&ki, &m)) in k.iter().zip(me.m()).enumerate() {
        if !(ki >= T::lit(2.0) && ki * (T::one() - m) > T::one()) {
            return Err(LocalMassError::Integrability { axis: i + 1, k: ki.as_f64(), m: m.as_f64() });
        }
    }
    let volume = bx.volume();
    let bump = Bump { bx, k };
    let y = compute_y(&bump, me)?;
    Ok(LocalMassProbe { bump, y, volume })
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Integral of g over [0, 1/2] with geometric grading toward 0 and a panel
/// break at `brk`.
fn graded_half(g: &dyn Fn(f64) -> f64, brk: f64, order: usize, levels: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let panel = |a: f64, b: f64| -> f64 {
        let (c, r) = ((a + b) / 2.0, (b - a) / 2.0);
        x.iter().zip(&w).map(|(xi, wi)| wi * g(c + r * xi)).sum::<f64>() * r
    };
    let mut s = panel(brk, 0.5);
    let mut b = brk;
    for _ in 0..levels {
        let a = b * 0.5;
        s += panel(a, b);
        b = a;
    }
    s + panel(0.0, b)
}

/// Integral over [0, 1] of a function symmetric about 1/2, with two
/// resolutions; returns the finer one after checking agreement.
fn symmetric_integral(g: &dyn Fn(f64) -> f64, brk: f64, axis: usize) -> Result<f64, LocalMassError> {
    let coarse = 2.0 * graded_half(g, brk, 16, 30);
    let fine = 2.0 * graded_half(g, brk, 24, 45);
    let rel = ((fine - coarse) / fine).abs();
    if !(rel <= 1e-3) {
        return Err(LocalMassError::Quadrature { axis, rel });
    }
    Ok(fine)
}

/// Z_i = int (phi_i^(-m)|phi_i''|)^(1/(1-m)) dx_i and I_j = int phi_j dx_j
/// per axis, from which Y_i = Z_i prod_{j != i} I_j.
fn axis_integrals<T: Real>(bump: &Bump<T>, me: &MediumExponents<T>) -> Result<(Vec<f64>, Vec<f64>), LocalMassError> {
    let mut z = Vec::new();
    let mut int = Vec::new();
    for i in 0..me.dim() {
        let k = bump.k[i].as_f64();
        let m = me.m()[i].as_f64();
        let a = bump.bx.lo[i].as_f64();
        let l = bump.bx.length(i).as_f64();
        let inflection = 0.5 * (1.0 - 1.0 / (2.0 * k - 1.0).sqrt());
        // integrate in physical coordinates x = a + L t
        let at = |t: f64| T::lit(a + l * t);
        let zi = symmetric_integral(
            &|t| {
                let phi = bump.factor(i, at(t)).as_f64();
                if phi <= 0.0 {
                    return 0.0;
                }
                (phi.powf(-m) * bump.factor_dd(i, at(t)).as_f64().abs()).powf(1.0 / (1.0 - m))
            },
            inflection,
            i + 1,
        )?;
        z.push(zi * l);
        let ii = symmetric_integral(&|t| bump.factor(i, at(t)).as_f64(), inflection, i + 1)?;
        int.push(ii * l);
    }
    Ok((z, int))
}

/// Y_i = int_K (phi^(-m_i) |d^2_ii phi|)^(1/(1-m_i)) dx by tensorized quadrature.
pub fn compute_y<T: Real>(bump: &Bump<T>, me: &MediumExponents<T>) -> Result<Vec<T>, LocalMassError> {
    let (z, int) = axis_integrals(bump, me)?;
    Ok((0..me.dim())
        .map(|i| {
            let others: f64 = (0..me.dim()).filter(|&j| j != i).map(|j| int[j]).product();
            T::lit(z[i] * others)
        })
        .collect())
}

/// X(t) for X' = sum_i X^m_i Y_i^(1-m_i), X(0) = x0, by adaptive RK4 in the
/// variable Z = X^(1 - m_min), where the right-hand side stays bounded at 0.
pub fn ode_mass_bound<T: Real>(x0: T, y: &[T], me: &MediumExponents<T>, t: T) -> T {
    let m: Vec<f64> = me.m().iter().map(|v| v.as_f64()).collect();
    let c: Vec<f64> = y.iter().zip(&m).map(|(&yi, &mi)| yi.as_f64().max(0.0).powf(1.0 - mi)).collect();
    if c.iter().all(|&ci| ci == 0.0) || t <= T::zero() {
        return x0;
    }
    let p = 1.0 - m.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let rhs = |z: f64| -> f64 {
        let z = z.max(0.0);
        p * m.iter().zip(&c).map(|(&mi, &ci)| ci * z.powf((mi - (1.0 - p)) / p)).sum::<f64>()
    };
    let rk4 = |z: f64, h: f64| -> f64 {
        let k1 = rhs(z);
        let k2 = rhs(z + 0.5 * h * k1);
        let k3 = rhs(z + 0.5 * h * k2);
        let k4 = rhs(z + h * k3);
        z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };
    let t_end = t.as_f64();
    let mut z = x0.as_f64().max(0.0).powf(p);
    let mut s = 0.0;
    let mut h = t_end / 64.0;
    while s < t_end {
        h = h.min(t_end - s);
        let full = rk4(z, h);
        let half = rk4(rk4(z, 0.5 * h), 0.5 * h);
        let err = (full - half).abs();
        let tol = 1e-13 * half.abs().max(1e-300);
        if err <= tol || h < 1e-12 * t_end {
            z = half + (half - full) / 15.0;
            s += h;
            if err < 0.1 * tol {
                h *= 2.0;
            }
        } else {
            h *= 0.5;
        }
    }
    T::lit(z.max(0.0).powf(1.0 / p))
}

/// Renormalized supersolution: with X~ = X/V and m_1 the largest exponent,
/// X~^(1-m_1)(t) <= max(X~(0), 1)^(1-m_1) + (1-m_1) A t,
/// A = sum_i c_i^(1-m_i) / L_i^2, c_i = Y_i L_i^(2/(1-m_i)) / V.
/// Returns the implied bound on X~(t) and the constant A.
pub fn renormalized_envelope<T: Real>(x0: T, probe: &LocalMassProbe<T>, me: &MediumExponents<T>, t: T) -> (T, T) {
    let v = probe.volume;
    let m1 = me.m_max();
    let one = T::one();
    let mut a = T::zero();
    for i in 0..me.dim() {
        let l = probe.bump.bx.length(i);
        let m = me.m()[i];
        let ci = probe.y[i] * l.powf(T::lit(2.0) / (one - m)) / v;
        a += ci.powf(one - m) / (l * l);
    }
    let start = (x0 / v).max(one).powf(one - m1);
    ((start + (one - m1) * a * t).powf(one / (one - m1)), a)
}

/// Per-snapshot quantities of the local mass check.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMassReport {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub bound: Vec<f64>,
    /// (bound - X) / bound.
    pub margin: Vec<f64>,
    /// Discrete sum_i int u^m_i d_ii phi and its Holder majorant.
    pub holder_lhs: Vec<f64>,
    pub holder_rhs: Vec<f64>,
    pub envelope: Vec<f64>,
    pub growth: Option<PowerLawFit>,
    pub y: Vec<f64>,
}

/// Midpoint-rule X = int u phi dx on the field's grid.
pub fn windowed_mass<T: Real>(u: &ScalarField<T>, bump: &Bump<T>) -> T {
    let g = u.grid();
    let d = g.dim();
    let vals = u.values();
    crate::real::pairwise_sum_by(vals.len(), &|k| {
        let x = g.coords(k);
        vals[k] * bump.eval(&x[..d])
    }) * g.cell_volume()
}

/// Checks every snapshot of `traj` against the ODE bound (relative tolerance
/// `tol`) and evaluates the discrete Holder inequality with Y_i computed by
/// the same midpoint rule.
pub fn verify_local_mass<T: Real>(
    traj: &Trajectory<T>,
    probe: &LocalMassProbe<T>,
    me: &MediumExponents<T>,
    tol: T,
) -> Result<LocalMassReport, LocalMassError> {
    let first = traj.snapshots.first().expect("trajectory has an initial state");
    let t0 = first.time();
    let x0 = windowed_mass(first, &probe.bump);
    let g = first.grid();
    let d = g.dim();
    let dv = g.cell_volume();
    let bump = &probe.bump;
    // discrete Y_i on the grid
    let yd: Vec<T> = (0..d)
        .map(|i| {
            let m = me.m()[i];
            crate::real::pairwise_sum_by(g.len(), &|k| {
                let x = g.coords(k);
                let phi = bump.eval(&x[..d]);
                if phi <= T::zero() {
                    return T::zero();
                }
                (phi.powf(-m) * bump.dd(&x[..d], i).abs()).powf(T::one() / (T::one() - m))
            }) * dv
        })
        .collect();
    let mut rep = LocalMassReport {
        times: Vec::new(),
        x: Vec::new(),
        bound: Vec::new(),
        margin: Vec::new(),
        holder_lhs: Vec::new(),
        holder_rhs: Vec::new(),
        envelope: Vec::new(),
        growth: None,
        y: probe.y.iter().map(|v| v.as_f64()).collect(),
    };
    for snap in &traj.snapshots {
        let t = snap.time() - t0;
        let x = windowed_mass(snap, bump);
        let bound = ode_mass_bound(x0, &probe.y, me, t);
        if x > bound * (T::one() + tol) {
            return Err(LocalMassError::BoundViolated { t: t.as_f64(), x: x.as_f64(), bound: bound.as_f64() });
        }
        let vals = snap.values();
        let mut lhs = T::zero();
        let mut rhs = T::zero();
        for i in 0..d {
            let m = me.m()[i];
            lhs += crate::real::pairwise_sum_by(vals.len(), &|k| {
                let xk = g.coords(k);
                vals[k].powf(m) * bump.dd(&xk[..d], i)
            }) * dv;
            rhs += x.powf(m) * yd[i].powf(T::one() - m);
        }
        let (env, _) = renormalized_envelope(x0, probe, me, t);
        rep.times.push(t.as_f64());
        rep.x.push(x.as_f64());
        rep.bound.push(bound.as_f64());
        rep.margin.push(((bound - x) / bound).as_f64());
        rep.holder_lhs.push(lhs.as_f64());
        rep.holder_rhs.push(rhs.as_f64());
        rep.envelope.push(env.as_f64());
    }
    let xt: Vec<f64> = rep.x.iter().map(|x| x / probe.volume.as_f64()).collect();
    let positive: Vec<usize> = (0..rep.times.len()).filter(|&k| rep.times[k] > 0.0 && xt[k] > 0.0).collect();
    if let (Some(&a), Some(&b)) = (positive.first(), positive.last()) {
        let ts: Vec<f64> = positive.iter().map(|&k| rep.times[k]).collect();
        let xs: Vec<f64> = positive.iter().map(|&k| xt[k]).collect();
        rep.growth = fit_power_law(&ts, &xs, (rep.times[a], rep.times[b])).ok();
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::validate_exponents;

    #[test]
    fn bump_shape() {
        let me = validate_exponents(1, &[0.5f64]).unwrap();
        let bx = AxisBox::new(vec![0.0f64], vec![1.0]).unwrap();
        let p = build_bump(bx.clone(), vec![4.0], &me).unwrap();
        assert!((p.bump.eval(&[0.5]) - 1.0).abs() < 1e-15);
        assert_eq!(p.bump.eval(&[0.0]), 0.0);
        assert_eq!(p.bump.eval(&[1.0]), 0.0);
        assert!(matches!(build_bump(bx, vec![1.5], &me), Err(LocalMassError::Integrability { .. })));
    }

    #[test]
    fn separable_ode() {
        let me = validate_exponents(1, &[0.5f64]).unwrap();
        for &t in &[0.1, 1.0, 7.5] {
            let x = ode_mass_bound(0.0, &[1.0], &me, t);
            assert!((x - t * t / 4.0).abs() <= 1e-8 * t * t / 4.0, "{x}");
        }
        assert_eq!(ode_mass_bound(2.0, &[0.0], &me, 3.0), 2.0);
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }
}
