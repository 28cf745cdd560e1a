//! Static log-log plots of report series, one panel per fitted exponent.

use afde::verify::{ExperimentReport, FitRecord, Series};
use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 360.0;
const PAD_L: f64 = 70.0;
const PAD_R: f64 = 20.0;
const PAD_T: f64 = 30.0;
const PAD_B: f64 = 45.0;

struct Panel<'a> {
    series: &'a Series,
    fit: Option<&'a FitRecord>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    top: f64,
}

impl Frame {
    fn px(&self, lx: f64) -> f64 {
        PAD_L + (lx - self.x0) / (self.x1 - self.x0) * (W - PAD_L - PAD_R)
    }

    fn py(&self, ly: f64) -> f64 {
        self.top + PAD_T + (self.y1 - ly) / (self.y1 - self.y0) * (H - PAD_T - PAD_B)
    }
}

fn positive(s: &Series) -> Vec<(f64, f64)> {
    s.x.iter().zip(&s.y).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect()
}

fn panels(rep: &ExperimentReport) -> Vec<Panel<'_>> {
    let with_fit: Vec<Panel> = rep
        .fits
        .iter()
        .filter_map(|f| rep.get_series(&f.name).map(|s| Panel { series: s, fit: Some(f) }))
        .collect();
    if !with_fit.is_empty() {
        return with_fit;
    }
    rep.series.iter().filter(|s| positive(s).len() >= 2).take(8).map(|s| Panel { series: s, fit: None }).collect()
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn draw(out: &mut String, p: &Panel, top: f64) {
    let pts = positive(p.series);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let my = 0.05 * (y1 - y0);
    let f = Frame { x0, x1, y0: y0 - my, y1: y1 + my, top };
    let _ = writeln!(
        out,
        r##"<rect x="{PAD_L}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##,
        top + PAD_T,
        W - PAD_L - PAD_R,
        H - PAD_T - PAD_B
    );
    let _ = writeln!(out, r#"<text x="{PAD_L}" y="{:.1}" font-size="13">{}</text>"#, top + 20.0, esc(&p.series.name));
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">log x: [{:.3e}, {:.3e}]</text>"#,
        (PAD_L + W - PAD_R) / 2.0,
        top + H - 12.0,
        x0.exp(),
        x1.exp()
    );
    let _ = writeln!(
        out,
        r#"<text x="12" y="{:.1}" font-size="11" transform="rotate(-90 12 {:.1})" text-anchor="middle">log y: [{:.3e}, {:.3e}]</text>"#,
        top + H / 2.0,
        top + H / 2.0,
        y0.exp(),
        y1.exp()
    );
    let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
    let _ = writeln!(out, r##"<polyline points="{}" fill="none" stroke="#1f5fa8" stroke-width="1.5"/>"##, path.join(" "));
    for &(x, y) in &pts {
        let _ = writeln!(out, r##"<circle cx="{:.2}" cy="{:.2}" r="2.2" fill="#1f5fa8"/>"##, f.px(x), f.py(y));
    }
    let Some(rec) = p.fit else { return };
    let fit = &rec.fit;
    let (a, b) = (fit.window.0.max(x0.exp()).ln(), fit.window.1.min(x1.exp()).ln());
    let line = |slope: f64, dash: &str, color: &str, out: &mut String| {
        // every line passes through the fitted value at the window midpoint
        let mid = 0.5 * (a + b);
        let ym = fit.intercept + fit.exponent * mid;
        let ya = ym + slope * (a - mid);
        let yb = ym + slope * (b - mid);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.2" {dash}/>"#,
            f.px(a),
            f.py(ya),
            f.px(b),
            f.py(yb)
        );
    };
    line(fit.exponent, "", "#c0392b", out);
    if let (Some(e), Some(tol)) = (rec.expected, rec.rel_tol) {
        for s in [e * (1.0 - tol), e * (1.0 + tol)] {
            line(s, r#"stroke-dasharray="5,4""#, "#7f8c8d", out);
        }
    }
    let target = rec.expected.map(|e| format!(", target {e:.4}")).unwrap_or_default();
    let band = rec.rel_tol.map(|t| format!(" +/- {:.0}%", 100.0 * t)).unwrap_or_default();
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="end">slope {:.4}{target}{band}, residual {:.2e}</text>"#,
        W - PAD_R,
        top + 20.0,
        fit.exponent,
        fit.residual
    );
}

/// One SVG document with a panel per fitted series (or per series when the
/// report has no fits).
pub fn render(rep: &ExperimentReport) -> String {
    let ps = panels(rep);
    let total = H * ps.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{total}" viewBox="0 0 {W} {total}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if ps.is_empty() {
        let _ = writeln!(out, r#"<text x="20" y="40" font-size="13">{}: no positive series to plot</text>"#, esc(&rep.experiment));
    }
    for (i, p) in ps.iter().enumerate() {
        draw(&mut out, p, i as f64 * H);
    }
    out.push_str("</svg>\n");
    out
}
