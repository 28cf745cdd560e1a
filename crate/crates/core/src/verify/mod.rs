//! Numerical experiments behind the acceptance criteria. Each experiment
//! returns an [`ExperimentReport`] with its measured series, fits and
//! verdicts; the harness is `f64` only.

mod benchmark;
mod local;
mod profiles;
mod relaxation;
mod report;
mod smoothing;

pub use benchmark::{exp_barenblatt_benchmark, BenchmarkConfig};
pub use local::{exp_local_mass, LocalMassConfig};
pub use profiles::{exp_isotropic_profile, exp_profile_and_tail, IsotropicProfileConfig, TailConfig};
pub use relaxation::{exp_acre, exp_ghp, exp_rates_and_semigroup, InitialData, RelaxationConfig, SemigroupConfig};
pub use report::{ExperimentReport, FitRecord, Series, Verdict, MAX_FIT_RESIDUAL, SCHEMA_VERSION};
pub use smoothing::{exp_smoothing_and_spread, SmoothingConfig};

use crate::closed_forms::ClosedFormError;
use crate::fit::FitError;
use crate::grid::{GridError, ScalarField};
use crate::local_mass::LocalMassError;
use crate::similarity::{ExponentErrors, RescaleError};
use crate::solver::SolverError;
use crate::{pairwise_sum, Field};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Exponents(#[from] ExponentErrors),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Rescale(#[from] RescaleError),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    LocalMass(#[from] LocalMassError),
}

impl VerifyError {
    /// True for failures of a numerical method rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, VerifyError::Solver(_) | VerifyError::Fit(_) | VerifyError::LocalMass(_))
    }
}

/// `n` points geometrically spaced on [a, b].
pub fn geometric_times(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && a > 0.0 && b > a);
    (0..n).map(|k| a * (b / a).powf(k as f64 / (n - 1) as f64)).collect()
}

/// Multilinear interpolation between cell centers, in log space where all
/// corner values are positive and linear otherwise. Log space keeps the
/// relative error small on steep tails.
pub struct FieldInterp<'a> {
    field: &'a Field,
}

impl<'a> FieldInterp<'a> {
    pub fn new(field: &'a Field) -> Self {
        FieldInterp { field }
    }

    /// None outside the hull of the cell centers.
    pub fn at(&self, y: &[f64]) -> Option<f64> {
        let g = self.field.grid();
        let d = g.dim();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for i in 0..d {
            let s = (y[i] + g.half()[i]) / g.h(i) - 0.5;
            let n = g.n()[i];
            if !(s >= 0.0 && s <= (n - 1) as f64) {
                return None;
            }
            let j = (s.floor() as usize).min(n - 2);
            base[i] = j;
            frac[i] = s - j as f64;
        }
        let vals = self.field.values();
        let corners = 1usize << d;
        let mut cv = [0.0; 8];
        let mut cw = [0.0; 8];
        for c in 0..corners {
            let mut idx = [0usize; 3];
            let mut w = 1.0;
            for i in 0..d {
                let bit = (c >> i) & 1;
                idx[i] = base[i] + bit;
                w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
            }
            cv[c] = vals[g.flat(&idx[..d])];
            cw[c] = w;
        }
        if cv[..corners].iter().all(|&v| v > 0.0) {
            Some((0..corners).map(|c| cw[c] * cv[c].ln()).sum::<f64>().exp())
        } else {
            Some((0..corners).map(|c| cw[c] * cv[c]).sum())
        }
    }
}

/// Half-width of the smallest interval [-w, w] along `axis` holding half of
/// the field's mass, with the marginal taken piecewise constant per cell.
pub fn half_mass_width(u: &ScalarField<f64>, axis: usize) -> f64 {
    let g = u.grid();
    let n = g.n()[axis];
    let h = g.h(axis);
    let vals = u.values();
    let mut marginal = vec![0.0; n];
    for (k, &v) in vals.iter().enumerate() {
        marginal[g.axis_index(k, axis)] += v;
    }
    let total = pairwise_sum(&marginal);
    let half = n / 2;
    let target = 0.5 * total;
    let mut acc = 0.0;
    for r in 0..half {
        let layer = marginal[half + r] + marginal[half - 1 - r];
        if acc + layer >= target {
            return h * (r as f64 + (target - acc) / layer);
        }
        acc += layer;
    }
    h * half as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample, TensorGrid};

    #[test]
    fn log_interpolation_is_exact_on_exponentials() {
        let g = TensorGrid::new(vec![8.0, 8.0], vec![32, 32]).unwrap();
        let u = sample(|x: &[f64]| (1.0 + x[0] * x[0]).powi(-2) * (-x[1]).exp(), &g, 0.0).unwrap();
        let ip = FieldInterp::new(&u);
        let v = ip.at(&[g.center(0, 20), 0.3]).unwrap();
        let exact = (1.0 + g.center(0, 20).powi(2)).powi(-2) * (-0.3f64).exp();
        assert!((v / exact - 1.0).abs() < 1e-12);
        assert!(ip.at(&[7.9, 0.0]).is_none());
    }

    #[test]
    fn half_width_of_uniform_block() {
        let g = TensorGrid::new(vec![4.0], vec![16]).unwrap();
        let u = sample(|x: &[f64]| if x[0].abs() < 2.0 { 1.0 } else { 0.0 }, &g, 0.0).unwrap();
        assert!((half_mass_width(&u, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_endpoints() {
        let t = geometric_times(1.0, 10.0, 5);
        assert_eq!(t[0], 1.0);
        assert!((t[4] - 10.0).abs() < 1e-12);
    }
}
