//! Run configuration: TOML with every key documented in CONFIG.md.

use afde::similarity::validate_exponents;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub exponents: ExponentBlock,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub initial: InitialBlock,
    #[serde(default)]
    pub experiment: ExperimentBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentBlock {
    pub n: usize,
    pub m: Vec<f64>,
}

/// Empty vectors mean "the default for this command and dimension".
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(default)]
    pub half: Vec<f64>,
    #[serde(default)]
    pub n: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FloorKind {
    Relative,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcName {
    Reflecting,
    Zero,
    Barrier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriftName {
    Hybrid,
    Upwind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub scheme: SchemeName,
    pub floor: f64,
    pub floor_kind: FloorKind,
    pub theta: f64,
    pub bc: BcName,
    pub drift: DriftName,
    pub t_end: f64,
    pub snapshots: Vec<f64>,
    pub steady_tol: f64,
    pub max_steps: usize,
    pub max_iters: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            scheme: SchemeName::Explicit,
            floor: 1e-8,
            floor_kind: FloorKind::Relative,
            theta: 0.9,
            bc: BcName::Reflecting,
            drift: DriftName::Hybrid,
            t_end: 1.0,
            snapshots: Vec::new(),
            steady_tol: 1e-4,
            max_steps: 2_000_000,
            max_iters: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    Box,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialBlock {
    pub kind: InitialKind,
    pub mass: f64,
    /// Half-widths (box) or standard deviations (gaussian) per axis.
    pub width: Vec<f64>,
}

impl Default for InitialBlock {
    fn default() -> Self {
        InitialBlock { kind: InitialKind::Box, mass: 1.0, width: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataName {
    Bump,
    Delayed,
    Exact,
}

/// Optional overrides of the experiment defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentBlock {
    pub mass: Option<f64>,
    pub ladder: Vec<f64>,
    pub seed: Option<u64>,
    pub pairs: Option<usize>,
    pub data: DataName,
    pub delay: Option<f64>,
    pub window: Vec<f64>,
    pub samples: Option<usize>,
}

impl Default for ExperimentBlock {
    fn default() -> Self {
        ExperimentBlock {
            mass: None,
            ladder: Vec::new(),
            seed: None,
            pairs: None,
            data: DataName::Bump,
            delay: None,
            window: Vec::new(),
            samples: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: String,
    pub formats: Vec<Format>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: "afde-out".into(), formats: vec![Format::Json] }
    }
}

/// Allowed keys per section, used to report every unknown key at once.
const SCHEMA: &[(&str, &[&str])] = &[
    ("exponents", &["n", "m"]),
    ("grid", &["half", "n"]),
    (
        "solver",
        &["scheme", "floor", "floor_kind", "theta", "bc", "drift", "t_end", "snapshots", "steady_tol", "max_steps", "max_iters"],
    ),
    ("initial", &["kind", "mass", "width"]),
    ("experiment", &["mass", "ladder", "seed", "pairs", "data", "delay", "window", "samples"]),
    ("output", &["dir", "formats"]),
];

fn unknown_keys(table: &toml::Table) -> Vec<String> {
    let mut errs = Vec::new();
    for (section, value) in table {
        let Some((_, keys)) = SCHEMA.iter().find(|(s, _)| s == section) else {
            errs.push(format!("{section}: unknown section"));
            continue;
        };
        match value.as_table() {
            Some(t) => {
                for key in t.keys() {
                    if !keys.contains(&key.as_str()) {
                        errs.push(format!("{section}.{key}: unknown key"));
                    }
                }
            }
            None => errs.push(format!("{section}: expected a table")),
        }
    }
    errs
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    // toml rejects duplicate keys here, naming the key and its line
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    let unknown = unknown_keys(&table);
    if !unknown.is_empty() {
        return Err(ConfigError::Invalid(unknown));
    }
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Invalid(vec![e.message().to_string()]))?;
    let errs = cfg.problems();
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(errs))
    }
}

pub fn read_config(path: &str) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
    parse_config(&text)
}

impl RunConfig {
    /// Minimal config for the given exponents with every default filled.
    pub fn for_exponents(m: Vec<f64>) -> Self {
        RunConfig {
            exponents: ExponentBlock { n: m.len(), m },
            grid: GridBlock::default(),
            solver: SolverBlock::default(),
            initial: InitialBlock::default(),
            experiment: ExperimentBlock::default(),
            output: OutputBlock::default(),
        }
    }

    /// Every constraint violation, each prefixed by its key path.
    pub fn problems(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let d = self.exponents.n;
        if let Err(e) = validate_exponents(d, &self.exponents.m) {
            for err in e.0 {
                errs.push(format!("exponents: {err}"));
            }
        }
        let g = &self.grid;
        if !g.half.is_empty() && g.half.len() != d {
            errs.push(format!("grid.half: {} entries, expected {d}", g.half.len()));
        }
        if !g.n.is_empty() && g.n.len() != d {
            errs.push(format!("grid.n: {} entries, expected {d}", g.n.len()));
        }
        if g.half.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            errs.push("grid.half: half-extents must be positive and finite".into());
        }
        if g.n.iter().any(|&n| n < 2 || n % 2 == 1) {
            errs.push("grid.n: cell counts must be even and at least 2".into());
        }
        let s = &self.solver;
        if !(s.theta > 0.0 && s.theta <= 1.0) {
            errs.push(format!("solver.theta: {} not in (0, 1]", s.theta));
        }
        if !(s.floor >= 0.0 && s.floor.is_finite()) {
            errs.push(format!("solver.floor: {} must be nonnegative", s.floor));
        }
        if !(s.t_end > 0.0 && s.t_end.is_finite()) {
            errs.push(format!("solver.t_end: {} must be positive", s.t_end));
        }
        if s.snapshots.windows(2).any(|w| !(w[0] < w[1])) {
            errs.push("solver.snapshots: times must be strictly increasing".into());
        }
        if s.snapshots.iter().any(|&t| !(t > 0.0 && t < s.t_end)) {
            errs.push("solver.snapshots: times must lie in (0, t_end)".into());
        }
        if !(s.steady_tol > 0.0) {
            errs.push(format!("solver.steady_tol: {} must be positive", s.steady_tol));
        }
        if s.max_steps == 0 || s.max_iters == 0 {
            errs.push("solver: max_steps and max_iters must be positive".into());
        }
        let i = &self.initial;
        if !(i.mass > 0.0 && i.mass.is_finite()) {
            errs.push(format!("initial.mass: {} must be positive", i.mass));
        }
        if !i.width.is_empty() && i.width.len() != d {
            errs.push(format!("initial.width: {} entries, expected {d}", i.width.len()));
        }
        if i.width.iter().any(|&w| !(w > 0.0)) {
            errs.push("initial.width: widths must be positive".into());
        }
        let e = &self.experiment;
        if e.mass.is_some_and(|m| !(m > 0.0 && m.is_finite())) {
            errs.push("experiment.mass: must be positive".into());
        }
        if e.ladder.iter().any(|&m| !(m > 0.0)) || e.ladder.windows(2).any(|w| !(w[0] < w[1])) {
            errs.push("experiment.ladder: masses must be positive and increasing".into());
        }
        if e.delay.is_some_and(|h| !(h > 0.0)) {
            errs.push("experiment.delay: must be positive".into());
        }
        if !e.window.is_empty() && !(e.window.len() == 2 && e.window[0] > 0.0 && e.window[0] < e.window[1]) {
            errs.push("experiment.window: expected [T, T_end] with 0 < T < T_end".into());
        }
        if e.samples.is_some_and(|n| n < 5) {
            errs.push("experiment.samples: at least 5 samples are needed for a fit".into());
        }
        if e.pairs == Some(0) {
            errs.push("experiment.pairs: must be positive".into());
        }
        if self.output.dir.is_empty() {
            errs.push("output.dir: must not be empty".into());
        }
        errs
    }

    /// Canonical JSON of the resolved config; the same on every machine.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// First 12 hex digits of the SHA-256 of the canonical JSON.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config("[exponents]\nn = 1\nm = [0.5]\n").unwrap();
        assert_eq!(cfg, RunConfig::for_exponents(vec![0.5]));
        assert_eq!(cfg.solver.theta, 0.9);
        assert_eq!(cfg.output.formats, vec![Format::Json]);
    }

    #[test]
    fn supercritical_sum_is_reported() {
        let err = parse_config("[exponents]\nn = 3\nm = [0.1, 0.2, 0.3]\n").unwrap_err().to_string();
        assert!(err.contains("0.6"), "{err}");
        assert!(err.contains("exponents"), "{err}");
    }

    #[test]
    fn duplicate_key_names_the_key() {
        let err = parse_config("[exponents]\nn = 1\nn = 1\nm = [0.5]\n").unwrap_err().to_string();
        assert!(err.contains("duplicate") && err.contains('n'), "{err}");
    }

    #[test]
    fn every_unknown_key_is_listed() {
        let err = parse_config("[exponents]\nn = 1\nm = [0.5]\nfoo = 1\n[solver]\nbar = 2\n[extra]\n").unwrap_err().to_string();
        for path in ["exponents.foo", "solver.bar", "extra"] {
            assert!(err.contains(path), "{path} missing from {err}");
        }
    }

    #[test]
    fn constraint_errors_are_collected() {
        let text = "[exponents]\nn = 2\nm = [0.8, 0.4]\n[grid]\nn = [3]\n[solver]\ntheta = 2.0\n";
        let ConfigError::Invalid(errs) = parse_config(text).unwrap_err() else { panic!() };
        assert!(errs.len() >= 3, "{errs:?}");
    }

    #[test]
    fn hash_depends_only_on_content() {
        let a = parse_config("[exponents]\nn = 2\nm = [0.8, 0.4]\n").unwrap();
        let b = parse_config("[exponents]\nm = [0.8, 0.4]\nn = 2\n\n[solver]\ntheta = 0.9\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 12);
        let c = parse_config("[exponents]\nn = 2\nm = [0.8, 0.41]\n").unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
