//! Least-squares power-law fits in log-log space.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least 5 points in the window, got {0}")]
    TooFewPoints(usize),
    #[error("window spans a factor {0:.3} in the abscissa, need at least 4")]
    NarrowWindow(f64),
    #[error("nonpositive sample at index {0}")]
    NonPositive(usize),
    #[error("abscissa and ordinate lengths differ ({0} vs {1})")]
    Length(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    /// Natural log of the prefactor.
    pub intercept: f64,
    /// RMS of the log-space residuals.
    pub residual: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Fits y = e^intercept x^exponent to the samples with x in `window`.
pub fn fit_power_law(xs: &[f64], ys: &[f64], window: (f64, f64)) -> Result<PowerLawFit, FitError> {
    if xs.len() != ys.len() {
        return Err(FitError::Length(xs.len(), ys.len()));
    }
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        if x < window.0 || x > window.1 {
            continue;
        }
        if !(x > 0.0 && y > 0.0) {
            return Err(FitError::NonPositive(i));
        }
        lo = lo.min(x);
        hi = hi.max(x);
        lx.push(x.ln());
        ly.push(y.ln());
    }
    let n = lx.len();
    if n < 5 {
        return Err(FitError::TooFewPoints(n));
    }
    if hi / lo < 4.0 {
        return Err(FitError::NarrowWindow(hi / lo));
    }
    let nf = n as f64;
    let mx = lx.iter().sum::<f64>() / nf;
    let my = ly.iter().sum::<f64>() / nf;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum();
    Ok(PowerLawFit { exponent, intercept, residual: (ss / nf).sqrt(), window: (lo, hi), points: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let xs: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        let f = fit_power_law(&xs, &ys, (1.0, 20.0)).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn perturbed_power_law() {
        let xs: Vec<f64> = (0..200).map(|i| 1.0 + i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| x.powf(-0.5) * (1.0 + 0.01 * x.sin())).collect();
        let f = fit_power_law(&xs, &ys, (1.0, 100.0)).unwrap();
        assert!((f.exponent + 0.5).abs() < 0.01);
    }

    #[test]
    fn rejects_bad_windows() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(fit_power_law(&xs, &[1.0, 1.0, -1.0, 1.0, 1.0], (0.0, 10.0)), Err(FitError::NonPositive(2)));
        assert_eq!(fit_power_law(&xs, &[1.0; 5], (0.0, 3.0)), Err(FitError::TooFewPoints(3)));
        let narrow = [1.0, 1.5, 2.0, 2.5, 3.0];
        assert!(matches!(fit_power_law(&narrow, &[1.0; 5], (0.0, 10.0)), Err(FitError::NarrowWindow(_))));
    }
}
