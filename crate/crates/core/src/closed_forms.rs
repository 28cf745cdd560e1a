//! Explicit profiles: Barenblatt solutions, very singular solution (VSS)
//! surrogates, sandwich bounds, mass rescaling and level lines.

use crate::similarity::{MediumExponents, SimilarityExponents};
use crate::Real;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClosedFormError {
    #[error("profile is singular at the origin")]
    Singular,
    #[error("nonpositive sample {value} at offset {offset:?}")]
    NonpositiveSample { value: f64, offset: Vec<f64> },
    #[error("exponent {m} outside the admissible range for dimension {n}")]
    Exponent { m: f64, n: usize },
    #[error("calibration invalid: {0}")]
    Calibration(String),
    #[error("direction must be a unit vector, |omega| = {0}")]
    NotUnit(f64),
    #[error("dimension mismatch: point has {got} coordinates, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

/// Which 1D normalization to use. `Certified` solves u_t = (u^m)_xx; `Printed`
/// is the coefficient (1-m)/(2(1+m)), which solves the equation with u^m/m in
/// place of u^m.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    Certified,
    Printed,
}

/// Outer exponent of the isotropic profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IsotropicExponent {
    /// -1/(1-m)
    #[default]
    Corrected,
    /// -2/(1-m)
    Printed,
}

/// Coefficient k in (C + k y^2)^(-1/(1-m)).
pub fn barenblatt_coefficient_1d<T: Real>(m: T, norm: Normalization) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    match norm {
        Normalization::Certified => (one - m) / (two * m * (one + m)),
        Normalization::Printed => (one - m) / (two * (one + m)),
    }
}

/// 1D Barenblatt profile (C + k y^2)^(-1/(1-m)).
pub fn barenblatt_profile_1d<T: Real>(y: T, m: T, c: T, norm: Normalization) -> Result<T, ClosedFormError> {
    if c == T::zero() && y == T::zero() {
        return Err(ClosedFormError::Singular);
    }
    let k = barenblatt_coefficient_1d(m, norm);
    Ok((c + k * y * y).powf(-T::one() / (T::one() - m)))
}

/// C(m; 1) = k^(-1/(1-m)), the constant of the 1D VSS.
pub fn vss_constant_1d<T: Real>(m: T, norm: Normalization) -> T {
    barenblatt_coefficient_1d(m, norm).powf(-T::one() / (T::one() - m))
}

/// 1D VSS C(m;1) t^(1/(1-m)) |x|^(-2/(1-m)).
pub fn vss_1d<T: Real>(x: T, t: T, m: T, norm: Normalization) -> Result<T, ClosedFormError> {
    if x == T::zero() {
        return Err(ClosedFormError::Singular);
    }
    let p = T::one() / (T::one() - m);
    Ok(vss_constant_1d(m, norm) * t.powf(p) * x.abs().powf(-T::lit(2.0) * p))
}

/// Coefficient alpha(1-m)/(2mN) of the isotropic profile.
pub fn isotropic_coefficient<T: Real>(m: T, n: usize) -> Result<T, ClosedFormError> {
    let nn = T::from_usize_lossy(n);
    let one = T::one();
    let two = T::lit(2.0);
    if n == 0 || !(m > T::zero() && m < one && m > one - two / nn) {
        return Err(ClosedFormError::Exponent { m: m.as_f64(), n });
    }
    let alpha = nn / (nn * (m - one) + two);
    Ok(alpha * (one - m) / (two * m * nn))
}

/// Isotropic profile (C + alpha(1-m)/(2mN) |y|^2)^(-1/(1-m)).
pub fn isotropic_profile<T: Real>(y: &[T], m: T, c: T, exponent: IsotropicExponent) -> Result<T, ClosedFormError> {
    let k = isotropic_coefficient(m, y.len())?;
    if !(c > T::zero()) {
        return Err(ClosedFormError::Calibration(format!("C = {c} must be positive")));
    }
    let r2 = y.iter().fold(T::zero(), |s, &v| s + v * v);
    let p = match exponent {
        IsotropicExponent::Corrected => T::one() / (T::one() - m),
        IsotropicExponent::Printed => T::lit(2.0) / (T::one() - m),
    };
    Ok((c + k * r2).powf(-p))
}

/// Integral over R^N of (C + k|y|^2)^(-p), finite for p > N/2.
pub fn power_bump_mass(n: usize, c: f64, k: f64, p: f64) -> f64 {
    let h = n as f64 / 2.0;
    assert!(p > h, "mass is infinite for p <= N/2");
    std::f64::consts::PI.powf(h) * c.powf(h - p) * k.powf(-h) * libm::tgamma(p - h) / libm::tgamma(p)
}

/// Constant C giving the isotropic profile mass `mass`.
pub fn isotropic_constant_for_mass(m: f64, n: usize, mass: f64) -> Result<f64, ClosedFormError> {
    let k = isotropic_coefficient(m, n)?;
    let p = 1.0 / (1.0 - m);
    let unit = power_bump_mass(n, 1.0, k, p);
    Ok((mass / unit).powf(1.0 / (n as f64 / 2.0 - p)))
}

/// Central-difference residual of sum_i [(F^m_i)_{y_i y_i} + alpha sigma_i (y_i F)_{y_i}].
pub fn residual_stationary<T: Real>(
    f: &dyn Fn(&[T]) -> T,
    me: &MediumExponents<T>,
    se: &SimilarityExponents<T>,
    y: &[T],
    h: T,
) -> Result<T, ClosedFormError> {
    let n = me.dim();
    if y.len() != n {
        return Err(ClosedFormError::Dimension { expected: n, got: y.len() });
    }
    let eval = |p: &[T]| -> Result<T, ClosedFormError> {
        let v = f(p);
        if !(v > T::zero()) {
            let offset = p.iter().zip(y).map(|(&a, &b)| (a - b).as_f64()).collect();
            return Err(ClosedFormError::NonpositiveSample { value: v.as_f64(), offset });
        }
        Ok(v)
    };
    let two = T::lit(2.0);
    let mut point = y.to_vec();
    let f0 = eval(&point)?;
    let mut res = T::zero();
    for i in 0..n {
        let m = me.m()[i];
        let c = se.alpha * se.sigma[i];
        point[i] = y[i] + h;
        let fp = eval(&point)?;
        point[i] = y[i] - h;
        let fm = eval(&point)?;
        point[i] = y[i];
        res += (fp.powf(m) - two * f0.powf(m) + fm.powf(m)) / (h * h);
        res += c * ((y[i] + h) * fp - (y[i] - h) * fm) / (two * h);
    }
    Ok(res)
}

/// Central-difference residual of u_t - sum_i (u^m_i)_{x_i x_i} at (x, t),
/// using step `h` in space and time.
pub fn residual_evolution<T: Real>(
    u: &dyn Fn(&[T], T) -> T,
    me: &MediumExponents<T>,
    x: &[T],
    t: T,
    h: T,
) -> Result<T, ClosedFormError> {
    let n = me.dim();
    if x.len() != n {
        return Err(ClosedFormError::Dimension { expected: n, got: x.len() });
    }
    let two = T::lit(2.0);
    let mut res = (u(x, t + h) - u(x, t - h)) / (two * h);
    let mut p = x.to_vec();
    let u0 = u(x, t);
    for i in 0..n {
        let m = me.m()[i];
        p[i] = x[i] + h;
        let up = u(&p, t);
        p[i] = x[i] - h;
        let um = u(&p, t);
        p[i] = x[i];
        res -= (up.powf(m) - two * u0.powf(m) + um.powf(m)) / (h * h);
    }
    Ok(res)
}

/// Axis constants C_i, sandwich constants K1 <= K2 and an optional table of
/// sphere values C(omega).
#[derive(Debug, Clone, PartialEq)]
pub struct VssCalibration<T> {
    pub c: Vec<T>,
    pub k1: T,
    pub k2: T,
    pub sphere: Option<Vec<(Vec<T>, T)>>,
    /// True when the constants come from the 1D formulas rather than a fit.
    pub surrogate: bool,
}

impl<T: Real> VssCalibration<T> {
    pub fn new(c: Vec<T>, k1: T, k2: T, sphere: Option<Vec<(Vec<T>, T)>>, surrogate: bool) -> Result<Self, ClosedFormError> {
        if c.iter().any(|&ci| !(ci > T::zero() && ci.is_finite())) {
            return Err(ClosedFormError::Calibration("axis constants must be positive and finite".into()));
        }
        if !(k1 > T::zero() && k1 <= k2 && k2.is_finite()) {
            return Err(ClosedFormError::Calibration(format!("need 0 < K1 <= K2, got {k1}, {k2}")));
        }
        if let Some(s) = &sphere {
            if s.iter().any(|(w, v)| w.len() != c.len() || !(*v > T::zero())) {
                return Err(ClosedFormError::Calibration("sphere values must be positive".into()));
            }
        }
        Ok(VssCalibration { c, k1, k2, sphere, surrogate })
    }

    /// Axis constants from the 1D VSS, K1 = min C_i and K2 = N max C_i.
    pub fn surrogate(me: &MediumExponents<T>, norm: Normalization) -> Self {
        let c: Vec<T> = me.m().iter().map(|&m| vss_constant_1d(m, norm)).collect();
        let k1 = c.iter().fold(T::infinity(), |a, &b| a.min(b));
        let k2 = T::from_usize_lossy(c.len()) * c.iter().fold(T::zero(), |a, &b| a.max(b));
        VssCalibration { c, k1, k2, sphere: None, surrogate: true }
    }

    /// Sphere value C(omega): the nearest tabulated direction when a table is
    /// present, otherwise the partition surrogate at t = 1.
    pub fn sphere_value(&self, omega: &[T], se: &SimilarityExponents<T>) -> Result<T, ClosedFormError> {
        match &self.sphere {
            Some(table) if !table.is_empty() => {
                let dist = |w: &[T]| w.iter().zip(omega).fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b));
                let mut best = &table[0];
                for entry in table {
                    if dist(&entry.0) < dist(&best.0) {
                        best = entry;
                    }
                }
                Ok(best.1)
            }
            _ => partition_min(omega, T::one(), se, self),
        }
    }

    /// Tabulates the partition surrogate on `samples` points of the unit circle
    /// (2D) or on the axis directions otherwise.
    pub fn with_synthesized_sphere(mut self, se: &SimilarityExponents<T>, samples: usize) -> Result<Self, ClosedFormError> {
        let n = self.c.len();
        let mut table = Vec::new();
        if n == 2 {
            for s in 0..samples {
                let th = T::lit(2.0 * std::f64::consts::PI * (s as f64 + 0.5) / samples as f64);
                let w = vec![th.cos(), th.sin()];
                let v = partition_min(&w, T::one(), se, &self)?;
                table.push((w, v));
            }
        } else {
            for i in 0..n {
                let mut w = vec![T::zero(); n];
                w[i] = T::one();
                let v = partition_min(&w, T::one(), se, &self)?;
                table.push((w, v));
            }
        }
        self.sphere = Some(table);
        Ok(self)
    }
}

/// Minimum over axes with x_i != 0 of C_i t^mu_i |x_i|^(-2 mu_i), with the
/// attaining axis. Ties go to the smallest axis index.
pub fn partition_argmin<T: Real>(
    x: &[T],
    t: T,
    se: &SimilarityExponents<T>,
    cal: &VssCalibration<T>,
) -> Result<(T, usize), ClosedFormError> {
    if x.len() != se.dim() || cal.c.len() != se.dim() {
        return Err(ClosedFormError::Dimension { expected: se.dim(), got: x.len() });
    }
    let mut best: Option<(T, usize)> = None;
    for (i, &xi) in x.iter().enumerate() {
        if xi == T::zero() {
            continue;
        }
        let mu = se.mu[i];
        let v = cal.c[i] * t.powf(mu) * xi.abs().powf(-T::lit(2.0) * mu);
        if best.is_none_or(|(b, _)| v < b) {
            best = Some((v, i));
        }
    }
    best.ok_or(ClosedFormError::Singular)
}

pub fn partition_min<T: Real>(
    x: &[T],
    t: T,
    se: &SimilarityExponents<T>,
    cal: &VssCalibration<T>,
) -> Result<T, ClosedFormError> {
    partition_argmin(x, t, se, cal).map(|(v, _)| v)
}

/// K / sum_i |y_i|^(2 mu_i).
pub fn sandwich_bound<T: Real>(y: &[T], se: &SimilarityExponents<T>, k: T) -> Result<T, ClosedFormError> {
    let g = anisotropic_gauge(y, se)?;
    if g == T::zero() {
        return Err(ClosedFormError::Singular);
    }
    Ok(k / g)
}

/// sum_i |y_i|^(2 mu_i); homogeneous of degree 1 under y_i -> k^gamma_i y_i.
pub fn anisotropic_gauge<T: Real>(y: &[T], se: &SimilarityExponents<T>) -> Result<T, ClosedFormError> {
    if y.len() != se.dim() {
        return Err(ClosedFormError::Dimension { expected: se.dim(), got: y.len() });
    }
    Ok(y.iter().zip(&se.mu).fold(T::zero(), |s, (&yi, &mu)| s + yi.abs().powf(T::lit(2.0) * mu)))
}

/// y -> k F(k^gamma_1 y_1, ..., k^gamma_N y_N); changes the mass by k^beta.
pub fn mass_rescale<'a, T: Real>(
    f: impl Fn(&[T]) -> T + 'a,
    k: T,
    se: &SimilarityExponents<T>,
) -> impl Fn(&[T]) -> T + 'a {
    let factors: Vec<T> = se.gamma.iter().map(|&g| k.powf(g)).collect();
    move |y: &[T]| {
        let z: Vec<T> = y.iter().zip(&factors).map(|(&a, &b)| a * b).collect();
        k * f(&z)
    }
}

/// Point on the level set {F = L} in direction omega:
/// x_i = omega_i C(omega)^gamma_i L^(-gamma_i).
pub fn level_line<T: Real>(
    omega: &[T],
    level: T,
    se: &SimilarityExponents<T>,
    cal: &VssCalibration<T>,
) -> Result<Vec<T>, ClosedFormError> {
    let norm = omega.iter().fold(T::zero(), |s, &w| s + w * w).sqrt();
    if (norm - T::one()).abs() > T::lit(1e-9) {
        return Err(ClosedFormError::NotUnit(norm.as_f64()));
    }
    if !(level > T::zero()) {
        return Err(ClosedFormError::Calibration(format!("level {level} must be positive")));
    }
    let c = cal.sphere_value(omega, se)?;
    Ok(omega.iter().zip(&se.gamma).map(|(&w, &g)| w * c.powf(g) * level.powf(-g)).collect())
}

/// t dV/dt / V for the partition surrogate, i.e. mu of the active axis.
pub fn vss_time_ratio<T: Real>(
    x: &[T],
    t: T,
    se: &SimilarityExponents<T>,
    cal: &VssCalibration<T>,
) -> Result<T, ClosedFormError> {
    let (_, i) = partition_argmin(x, t, se, cal)?;
    Ok(se.mu[i])
}

/// (V(x, t+h) - V(x, t)) / (h V(x, t)) for the partition surrogate.
pub fn delayed_relative_error<T: Real>(
    x: &[T],
    t: T,
    h: T,
    se: &SimilarityExponents<T>,
    cal: &VssCalibration<T>,
) -> Result<T, ClosedFormError> {
    let v0 = partition_min(x, t, se, cal)?;
    let v1 = partition_min(x, t + h, se, cal)?;
    Ok((v1 - v0) / (h * v0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::{derive_similarity, validate_exponents};

    #[test]
    fn printed_examples() {
        let p = Normalization::Printed;
        assert!((barenblatt_profile_1d(0.0f64, 0.5, 1.0, p).unwrap() - 1.0).abs() < 1e-15);
        assert!((barenblatt_profile_1d(6f64.sqrt(), 0.5, 1.0, p).unwrap() - 0.25).abs() < 1e-15);
        assert!((vss_constant_1d(0.5f64, p) - 36.0).abs() < 1e-12);
        assert!((vss_1d(1.0f64, 4.0, 0.5, p).unwrap() - 576.0).abs() < 1e-10);
    }

    #[test]
    fn certified_constants() {
        let c = Normalization::Certified;
        assert!((vss_constant_1d(0.5f64, c) - 9.0).abs() < 1e-12);
        assert!((vss_constant_1d(0.8f64, c) - 14.4f64.powi(5)).abs() < 1e-6);
        assert!((vss_constant_1d(0.4f64, c) - (15.0f64 / 28.0).powf(-5.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn singular_inputs() {
        assert_eq!(barenblatt_profile_1d(0.0, 0.5, 0.0, Normalization::Certified), Err(ClosedFormError::Singular));
        assert_eq!(vss_1d(0.0, 1.0, 0.5, Normalization::Certified), Err(ClosedFormError::Singular));
    }

    #[test]
    fn isotropic_mass_relation() {
        // N = 2, m = 1/2: mass 2 pi / C
        let c = isotropic_constant_for_mass(0.5f64, 2, 1.0).unwrap();
        assert!((c - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn constant_residual_at_origin() {
        let me = validate_exponents(2, &[0.8f64, 0.4]).unwrap();
        let se = derive_similarity(&me);
        let r = residual_stationary(&|_: &[f64]| 3.0, &me, &se, &[0.0, 0.0], 1e-3).unwrap();
        assert!((r - se.alpha * 3.0).abs() < 1e-10);
    }

    #[test]
    fn partition_example() {
        let me = validate_exponents(2, &[0.8f64, 0.4]).unwrap();
        let se = derive_similarity(&me);
        let cal = VssCalibration::surrogate(&me, Normalization::Printed);
        assert!((cal.c[0] - 1_889_568.0).abs() < 1e-4);
        let (v, i) = partition_argmin(&[1.0, 1.0], 1.0, &se, &cal).unwrap();
        assert_eq!(i, 1);
        assert!((v - (14.0f64 / 3.0).powf(5.0 / 3.0)).abs() < 1e-10);
        assert!((vss_time_ratio(&[1.0, 1.0], 1.0, &se, &cal).unwrap() - 5.0 / 3.0).abs() < 1e-15);
    }
}
