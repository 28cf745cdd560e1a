//! Exponent hypotheses, the self-similarity algebra and the change to
//! self-similar variables.

use crate::grid::{ScalarField, TensorGrid};
use crate::Real;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExponentError {
    #[error("dimension must be at least 1, got {0}")]
    Dimension(usize),
    #[error("expected {expected} exponents, got {got}")]
    Count { expected: usize, got: usize },
    #[error("axis {axis}: m = {value} is not in the fast-diffusion range (0, 1)")]
    FastDiffusion { axis: usize, value: f64 },
    #[error("sum of exponents {sum} must exceed N - 2 = {bound}")]
    Supercritical { sum: f64, bound: f64 },
}

/// Every violated constraint found by [`validate_exponents`].
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid exponents: {}", join(.0))]
pub struct ExponentErrors(pub Vec<ExponentError>);

fn join(errs: &[ExponentError]) -> String {
    errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
}

/// Diffusion exponents m_1..m_N satisfying 0 < m_i < 1 and sum m_i > N - 2.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumExponents<T> {
    m: Vec<T>,
}

impl<T: Real> MediumExponents<T> {
    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self) -> &[T] {
        &self.m
    }

    pub fn sum(&self) -> T {
        self.m.iter().fold(T::zero(), |s, &x| s + x)
    }

    pub fn mbar(&self) -> T {
        self.sum() / T::from_usize_lossy(self.dim())
    }

    /// Critical isotropic exponent 1 - 2/N.
    pub fn mcrit(&self) -> T {
        T::one() - T::lit(2.0) / T::from_usize_lossy(self.dim())
    }

    pub fn m_max(&self) -> T {
        self.m.iter().fold(T::neg_infinity(), |a, &b| a.max(b))
    }

    pub fn m_min(&self) -> T {
        self.m.iter().fold(T::infinity(), |a, &b| a.min(b))
    }

    pub fn is_isotropic(&self) -> bool {
        self.m.iter().all(|&x| x == self.m[0])
    }
}

/// Checks both hypotheses with strict inequalities and reports every violation.
pub fn validate_exponents<T: Real>(n: usize, m: &[T]) -> Result<MediumExponents<T>, ExponentErrors> {
    let mut errs = Vec::new();
    if n < 1 {
        errs.push(ExponentError::Dimension(n));
    }
    if m.len() != n {
        errs.push(ExponentError::Count { expected: n, got: m.len() });
    }
    for (axis, &v) in m.iter().enumerate() {
        if !(v > T::zero() && v < T::one()) {
            errs.push(ExponentError::FastDiffusion { axis: axis + 1, value: v.as_f64() });
        }
    }
    if n >= 1 && m.len() == n {
        let sum = m.iter().fold(T::zero(), |s, &x| s + x);
        let bound = T::from_usize_lossy(n) - T::lit(2.0);
        if !(sum > bound) {
            errs.push(ExponentError::Supercritical { sum: sum.as_f64(), bound: bound.as_f64() });
        }
    }
    if errs.is_empty() {
        Ok(MediumExponents { m: m.to_vec() })
    } else {
        Err(ExponentErrors(errs))
    }
}

/// The scaling algebra derived from the exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityExponents<T> {
    pub alpha: T,
    pub sigma: Vec<T>,
    pub a: Vec<T>,
    pub gamma: Vec<T>,
    pub mu: Vec<T>,
    pub delta: Vec<T>,
    pub beta: T,
}

pub fn derive_similarity<T: Real>(me: &MediumExponents<T>) -> SimilarityExponents<T> {
    let n = T::from_usize_lossy(me.dim());
    let mbar = me.mbar();
    let one = T::one();
    let two = T::lit(2.0);
    let alpha = n / (n * (mbar - one) + two);
    let sigma: Vec<T> = me.m().iter().map(|&m| one / n + (mbar - m) / two).collect();
    let a = sigma.iter().map(|&s| s * alpha).collect();
    let gamma: Vec<T> = me.m().iter().map(|&m| (one - m) / two).collect();
    let mu: Vec<T> = me.m().iter().map(|&m| one / (one - m)).collect();
    let delta = mu.clone();
    let beta = one - n * (one - mbar) / two;
    assert!(beta > T::zero(), "beta must be positive for subcritical exponents");
    let se = SimilarityExponents { alpha, sigma, a, gamma, mu, delta, beta };
    debug_assert!(se
        .delta
        .iter()
        .zip(&se.sigma)
        .zip(&se.mu)
        .all(|((&d, &s), &mu)| {
            // cancellation happens at the scale of the terms, not of delta
            let scale = two * s * alpha * mu + alpha;
            (d - (two * s * alpha * mu - alpha)).abs() <= (T::epsilon() * T::lit(64.0)).max(T::lit(1e-12)) * scale
        }));
    se
}

impl<T: Real> SimilarityExponents<T> {
    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    /// Drift coefficients alpha * sigma_i of the rescaled equation.
    pub fn drift(&self) -> Vec<T> {
        self.sigma.iter().map(|&s| self.alpha * s).collect()
    }

    pub fn mu_min(&self) -> T {
        self.mu.iter().fold(T::infinity(), |a, &b| a.min(b))
    }

    pub fn mu_max(&self) -> T {
        self.mu.iter().fold(T::neg_infinity(), |a, &b| a.max(b))
    }

    /// Largest relative violation among the algebraic identities linking the
    /// exponents to `me`.
    pub fn identity_residual(&self, me: &MediumExponents<T>) -> T {
        let one = T::one();
        let two = T::lit(2.0);
        let rel = |lhs: T, rhs: T| (lhs - rhs).abs() / rhs.abs().max(one);
        let mut worst = T::zero();
        let sum_sigma = self.sigma.iter().fold(T::zero(), |s, &x| s + x);
        worst = worst.max(rel(sum_sigma, one));
        let sum_gamma = self.gamma.iter().fold(T::zero(), |s, &x| s + x);
        worst = worst.max(rel(self.beta, one - sum_gamma));
        for i in 0..self.dim() {
            let m = me.m()[i];
            worst = worst.max(rel(self.alpha * (m - one) + two * self.a[i], one));
            worst = worst.max(rel(self.sigma[i] - self.gamma[i], one / (two * self.alpha)));
            worst = worst.max(rel(self.delta[i], two * self.sigma[i] * self.alpha * self.mu[i] - self.alpha));
            worst = worst.max(rel(self.a[i], self.sigma[i] * self.alpha));
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RescaleError {
    #[error("time shift t0 = {0} must be nonnegative")]
    NegativeShift(f64),
    #[error("shifted time t + t0 = {0} must be positive")]
    NonpositiveTime(f64),
    #[error("field dimension {field} does not match exponent dimension {exponents}")]
    Dimension { field: usize, exponents: usize },
}

/// Map between physical (x, t) and self-similar (y, tau) variables with time
/// shift t0: tau = log(t + t0), y_i = x_i (t + t0)^(-sigma_i alpha).
#[derive(Debug, Clone, PartialEq)]
pub struct RescaleMap<T> {
    se: SimilarityExponents<T>,
    t0: T,
}

impl<T: Real> RescaleMap<T> {
    pub fn new(se: SimilarityExponents<T>, t0: T) -> Result<Self, RescaleError> {
        if !(t0 >= T::zero()) {
            return Err(RescaleError::NegativeShift(t0.as_f64()));
        }
        Ok(RescaleMap { se, t0 })
    }

    pub fn exponents(&self) -> &SimilarityExponents<T> {
        &self.se
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn tau_of(&self, t: T) -> Result<T, RescaleError> {
        let s = t + self.t0;
        if !(s > T::zero()) {
            return Err(RescaleError::NonpositiveTime(s.as_f64()));
        }
        Ok(s.ln())
    }

    pub fn t_of(&self, tau: T) -> T {
        tau.exp() - self.t0
    }

    fn scale(&self, field: &ScalarField<T>, s: T, time: T) -> Result<ScalarField<T>, RescaleError> {
        let g = field.grid();
        if g.dim() != self.se.dim() {
            return Err(RescaleError::Dimension { field: g.dim(), exponents: self.se.dim() });
        }
        let factors: Vec<T> = self.se.sigma.iter().map(|&sg| s.powf(-sg * self.se.alpha)).collect();
        let grid: TensorGrid<T> = g.scaled(&factors);
        let amp = s.powf(self.se.alpha);
        let values = field.values().iter().map(|&u| u * amp).collect();
        Ok(ScalarField::from_parts(grid, values, time))
    }

    /// v(y) = (t + t0)^alpha u(x) on the image grid; returns the field stamped
    /// with tau together with tau.
    pub fn to_selfsimilar(&self, u: &ScalarField<T>) -> Result<(ScalarField<T>, T), RescaleError> {
        let tau = self.tau_of(u.time())?;
        let s = u.time() + self.t0;
        Ok((self.scale(u, s, tau)?, tau))
    }

    /// Exact inverse of [`RescaleMap::to_selfsimilar`].
    pub fn from_selfsimilar(&self, v: &ScalarField<T>) -> Result<(ScalarField<T>, T), RescaleError> {
        let tau = v.time();
        let s = tau.exp();
        let t = s - self.t0;
        Ok((self.scale(v, T::one() / s, t)?, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn me(m: &[f64]) -> MediumExponents<f64> {
        validate_exponents(m.len(), m).unwrap()
    }

    #[test]
    fn anisotropic_table() {
        let me = me(&[0.8, 0.4]);
        assert!((me.mbar() - 0.6).abs() < 1e-15);
        assert_eq!(me.mcrit(), 0.0);
        let se = derive_similarity(&me);
        let close = |a: f64, b: f64| assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        close(se.alpha, 5.0 / 3.0);
        close(se.sigma[0], 0.4);
        close(se.sigma[1], 0.6);
        close(se.a[0], 2.0 / 3.0);
        close(se.a[1], 1.0);
        close(se.gamma[0], 0.1);
        close(se.gamma[1], 0.3);
        close(se.mu[0], 5.0);
        close(se.mu[1], 5.0 / 3.0);
        close(se.beta, 0.6);
        close(se.alpha * (0.8 - 1.0) + 2.0 * se.a[0], 1.0);
    }

    #[test]
    fn isotropic_and_one_dimensional() {
        let se = derive_similarity(&me(&[0.5, 0.5]));
        assert!((se.alpha - 2.0).abs() < 1e-15);
        assert_eq!(se.sigma, vec![0.5, 0.5]);
        let se = derive_similarity(&me(&[0.5]));
        assert!((se.alpha - 1.0 / 1.5).abs() < 1e-15);
        assert!((se.sigma[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hypothesis_violations_are_listed() {
        let e = validate_exponents(3, &[0.1, 0.2, 0.3]).unwrap_err();
        assert_eq!(e.0.len(), 1);
        assert!(matches!(e.0[0], ExponentError::Supercritical { sum, bound } if (sum - 0.6).abs() < 1e-12 && bound == 1.0));
        let e = validate_exponents(2, &[1.2, 0.5]).unwrap_err();
        assert_eq!(e.0, vec![ExponentError::FastDiffusion { axis: 1, value: 1.2 }]);
        let e = validate_exponents::<f64>(0, &[]).unwrap_err();
        assert!(matches!(e.0[0], ExponentError::Dimension(0)));
        let e = validate_exponents(2, &[0.5]).unwrap_err();
        assert!(matches!(e.0[0], ExponentError::Count { expected: 2, got: 1 }));
    }

    #[test]
    fn boundary_exponents_are_rejected() {
        assert!(validate_exponents(1, &[1.0]).is_err());
        assert!(validate_exponents(1, &[0.0]).is_err());
        // sum exactly N - 2
        assert!(validate_exponents(3, &[0.25, 0.5, 0.25]).is_err());
    }

    #[test]
    fn f32_algebra() {
        let me = validate_exponents(2, &[0.8f32, 0.4]).unwrap();
        let se = derive_similarity(&me);
        assert!((se.alpha - 5.0 / 3.0).abs() < 1e-5);
        assert!(se.identity_residual(&me) < 1e-5);
    }
}
