use crate::fit::PowerLawFit;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const SCHEMA_VERSION: u32 = 1;

/// Largest log-RMS residual for which a fitted exponent may decide a verdict.
pub const MAX_FIT_RESIDUAL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub name: String,
    pub fit: PowerLawFit,
    pub expected: Option<f64>,
    /// Verdict judging this fit and its relative tolerance, when one exists.
    #[serde(default)]
    pub criterion: Option<String>,
    #[serde(default)]
    pub rel_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// Criterion id, e.g. "smoothing.sup_slope".
    pub criterion: String,
    pub passed: bool,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub exponents: Vec<f64>,
    pub parameters: BTreeMap<String, f64>,
    pub labels: BTreeMap<String, String>,
    pub series: Vec<Series>,
    pub fits: Vec<FitRecord>,
    pub verdicts: Vec<Verdict>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, exponents: &[f64]) -> Self {
        ExperimentReport {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.to_string(),
            exponents: exponents.to_vec(),
            parameters: BTreeMap::new(),
            labels: BTreeMap::new(),
            series: Vec::new(),
            fits: Vec::new(),
            verdicts: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: f64) {
        self.parameters.insert(key.to_string(), value);
    }

    pub fn label(&mut self, key: &str, value: impl Into<String>) {
        self.labels.insert(key.to_string(), value.into());
    }

    /// Stores a series; non-finite samples are dropped so the report stays
    /// representable in JSON.
    pub fn series(&mut self, name: &str, x: &[f64], y: &[f64]) {
        let (xs, ys) = x.iter().zip(y).filter(|(a, b)| a.is_finite() && b.is_finite()).map(|(a, b)| (*a, *b)).unzip();
        self.series.push(Series { name: name.to_string(), x: xs, y: ys });
    }

    pub fn fit(&mut self, name: &str, fit: PowerLawFit, expected: Option<f64>) {
        self.fits.push(FitRecord { name: name.to_string(), fit, expected, criterion: None, rel_tol: None });
    }

    pub fn verdict(&mut self, criterion: &str, passed: bool, measured: f64, target: f64, tolerance: f64, detail: impl Into<String>) {
        let clean = |v: f64| if v.is_finite() { v } else { f64::MAX.copysign(v) };
        self.verdicts.push(Verdict {
            criterion: criterion.to_string(),
            passed,
            measured: clean(measured),
            target: clean(target),
            tolerance: clean(tolerance),
            detail: detail.into(),
        });
    }

    /// Verdict on a fitted exponent: relative deviation from `target` at most
    /// `rel_tol`, and a fit residual below [`MAX_FIT_RESIDUAL`].
    pub fn exponent_verdict(&mut self, criterion: &str, fit: &PowerLawFit, target: f64, rel_tol: f64) {
        let dev = (fit.exponent - target).abs() / target.abs();
        let ok = dev <= rel_tol && fit.residual < MAX_FIT_RESIDUAL;
        if let Some(rec) = self.fits.iter_mut().rev().find(|r| r.fit == *fit && r.criterion.is_none()) {
            rec.criterion = Some(criterion.to_string());
            rec.rel_tol = Some(rel_tol);
        }
        self.verdict(
            criterion,
            ok,
            fit.exponent,
            target,
            rel_tol,
            format!("relative deviation {dev:.4}, fit residual {:.2e}, {} points", fit.residual, fit.points),
        );
    }

    pub fn get_verdict(&self, criterion: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.criterion == criterion)
    }

    pub fn get_series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}
