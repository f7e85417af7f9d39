//! Plain-text SVG rendering of sweep results.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::ecg::{QrsRecording, LEAD_NAMES};
use crate::error::Result;
use crate::experiment::ExperimentReport;

pub const SVG_PROLOG: &str = r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#;
pub const SVG_EPILOG: &str = "</svg>\n";

const CELL: f64 = 28.0;
const LABEL_W: f64 = 220.0;
const HEADER_H: f64 = 60.0;

#[derive(Debug, Default)]
pub struct PlotOutput {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(width: f64, height: f64) -> String {
    format!(
        "{SVG_PROLOG}\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// White to dark red.
fn colour(v: f64, max: f64) -> String {
    let t = if max > 0.0 { (v / max).clamp(0.0, 1.0) } else { 0.0 };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(255.0, 128.0), lerp(255.0, 0.0), lerp(255.0, 0.0))
}

/// Grid of coloured cells with row and column labels.
pub fn matrix_svg(title: &str, rows: &[String], cols: &[String], values: &[Vec<f64>]) -> String {
    let max = values.iter().flatten().copied().fold(0.0, f64::max);
    let w = LABEL_W + CELL * cols.len() as f64 + 20.0;
    let h = HEADER_H + CELL * rows.len() as f64 + 40.0;
    let mut s = open(w, h);
    let _ = writeln!(s, "<text x=\"10\" y=\"18\" font-size=\"14\">{}</text>", escape(title));
    for (j, c) in cols.iter().enumerate() {
        let x = LABEL_W + CELL * (j as f64 + 0.5);
        let _ = writeln!(
            s,
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"start\" transform=\"rotate(-45 {x:.1} {:.1})\">{}</text>",
            HEADER_H - 4.0,
            HEADER_H - 4.0,
            escape(c)
        );
    }
    for (i, r) in rows.iter().enumerate() {
        let y = HEADER_H + CELL * i as f64;
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>", LABEL_W - 6.0, y + CELL * 0.65, escape(r));
        for (j, &v) in values[i].iter().enumerate() {
            let _ = writeln!(
                s,
                "<rect class=\"cell\" x=\"{:.1}\" y=\"{y:.1}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{}\" stroke=\"#999\"><title>{} / {}: {v:.4}</title></rect>",
                LABEL_W + CELL * j as f64,
                colour(v, max),
                escape(r),
                escape(&cols[j])
            );
        }
    }
    let _ = writeln!(s, "<text x=\"10\" y=\"{:.1}\">max = {max:.4}</text>", h - 12.0);
    s.push_str(SVG_EPILOG);
    s
}

fn polyline(trace: &[f64], x0: f64, y0: f64, w: f64, h: f64, n: usize, amp: f64, stroke: &str) -> String {
    let mut pts = String::new();
    for (k, v) in trace.iter().enumerate() {
        let x = x0 + w * k as f64 / (n.max(2) - 1) as f64;
        let y = y0 + h / 2.0 - (h / 2.0) * v / amp;
        let _ = write!(pts, "{}{x:.2},{y:.2}", if k == 0 { "" } else { " " });
    }
    format!("<polyline fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.2\" points=\"{pts}\"/>\n")
}

/// Twelve panels (3 columns x 4 rows), baseline in grey under the scenario in red.
pub fn traces_svg(title: &str, baseline: &QrsRecording<f64>, scenario: &QrsRecording<f64>) -> String {
    let (pw, ph, pad) = (260.0, 140.0, 20.0);
    let w = 3.0 * (pw + pad) + pad;
    let h = 4.0 * (ph + pad) + pad + 30.0;
    let n = baseline.len().max(scenario.len());
    let amp = baseline.leads.iter().chain(&scenario.leads).flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    let mut s = open(w, h);
    let _ = writeln!(s, "<text x=\"{pad}\" y=\"20\" font-size=\"14\">{}</text>", escape(title));
    for (i, name) in LEAD_NAMES.iter().enumerate() {
        let x0 = pad + (i / 4) as f64 * (pw + pad);
        let y0 = 30.0 + pad + (i % 4) as f64 * (ph + pad);
        let _ = writeln!(s, "<rect x=\"{x0:.1}\" y=\"{y0:.1}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#ccc\"/>");
        let _ = writeln!(
            s,
            "<line x1=\"{x0:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#eee\"/>",
            y0 + ph / 2.0,
            x0 + pw,
            y0 + ph / 2.0
        );
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\">{name}</text>", x0 + 4.0, y0 + 14.0);
        s.push_str(&polyline(&baseline.leads[i], x0, y0, pw, ph, n, amp, "#888"));
        s.push_str(&polyline(&scenario.leads[i], x0, y0, pw, ph, n, amp, "#c00"));
    }
    s.push_str(SVG_EPILOG);
    s
}

/// Heatmap, pairwise matrix and one trace overlay per successful scenario.
///
/// With no scenarios besides the baseline nothing is drawn and a warning is returned.
pub fn emit_plots(report: &ExperimentReport, dir: &Path) -> Result<PlotOutput> {
    let mut out = PlotOutput::default();
    let d = &report.dissimilarity;
    if d.names.is_empty() {
        out.warnings.push("no scenarios besides the baseline; skipping plots".into());
        return Ok(out);
    }
    let mut put = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        out.files.push(path);
        Ok(())
    };
    let cols: Vec<String> = LEAD_NAMES.iter().map(|s| s.to_string()).collect();
    put("heatmap.svg".into(), matrix_svg("Per-lead DTW against baseline", &d.names, &cols, &d.per_lead))?;
    put("pairwise.svg".into(), matrix_svg("Pairwise mean-lead DTW", &d.pairwise_names, &d.pairwise_names, &d.pairwise))?;
    let base = &report.baseline().recording;
    for e in &report.entries[1..] {
        if let Some(r) = e.result() {
            put(format!("traces_{}.svg", e.name), traces_svg(&e.name, base, &r.recording))?;
        }
    }
    Ok(out)
}
