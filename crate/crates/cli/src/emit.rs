//! Writes reports and fields to the output directory.

use crate::config::Format;
use crate::svg;
use afde::verify::ExperimentReport;
use afde::Field;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub struct Sink {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
    pub stem: String,
}

impl Sink {
    fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}{suffix}", self.stem))
    }

    fn write(&self, path: &Path, body: &str) -> std::io::Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        fs::write(path, body)?;
        Ok(path.to_path_buf())
    }

    /// JSON always; CSV series and SVG panels when requested.
    pub fn report(&self, rep: &ExperimentReport) -> std::io::Result<Vec<PathBuf>> {
        let json = serde_json::to_string_pretty(rep).map_err(std::io::Error::other)?;
        let mut written = vec![self.write(&self.path(".json"), &json)?];
        if self.formats.contains(&Format::Csv) {
            for s in &rep.series {
                let mut body = String::from("x,y\n");
                for (x, y) in s.x.iter().zip(&s.y) {
                    let _ = writeln!(body, "{x:e},{y:e}");
                }
                written.push(self.write(&self.path(&format!("-{}.csv", s.name)), &body)?);
            }
        }
        if self.formats.contains(&Format::Svg) {
            written.push(self.write(&self.path(".svg"), &svg::render(rep))?);
        }
        Ok(written)
    }

    pub fn field(&self, tag: &str, f: &Field) -> std::io::Result<PathBuf> {
        self.write(&self.path(&format!("-{tag}.csv")), &f.to_csv())
    }
}

/// Plain-text summary of a report: parameters, fits and verdicts.
pub fn summary(rep: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} (m = {:?})", rep.experiment, rep.exponents);
    for (k, v) in &rep.parameters {
        let _ = writeln!(out, "  {k:<28} {v}");
    }
    for f in &rep.fits {
        let exp = f.expected.map(|e| format!(" (target {e:.6})")).unwrap_or_default();
        let _ = writeln!(
            out,
            "  fit {:<24} slope {:.6}{exp}, residual {:.2e}, {} points",
            f.name, f.fit.exponent, f.fit.residual, f.fit.points
        );
    }
    for v in &rep.verdicts {
        let tag = if v.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "  {tag} {:<28} measured {:.6e}  {}", v.criterion, v.measured, v.detail);
    }
    out
}
