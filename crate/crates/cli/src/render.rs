//! Text tables, CSV and SVG charts.

use std::fmt::Write;

use departure_core::gmm::GmmModel;
use departure_core::margins::TraceEntry;
use departure_core::{BinGrid, EvaluationReport, GranularityResult, MarginForecast};

pub fn margin_table(f: &MarginForecast) -> String {
    let mut out = String::new();
    writeln!(out, "k = {} (two-sided coverage {:.4})", f.k, f.confidence_level).unwrap();
    writeln!(out, "{:<16}{:>12}{:>12}{:>12}", "interval", "mean", "lower", "upper").unwrap();
    for (i, b) in f.bins.iter().enumerate() {
        writeln!(out, "{:<16}{:>12.4}{:>12.4}{:>12.4}", f.grid.label(i), b.mean, b.lower, b.upper).unwrap();
    }
    out
}

pub fn margin_csv(f: &MarginForecast) -> String {
    let mut out = String::from("interval,mean,lower,upper\n");
    for (i, b) in f.bins.iter().enumerate() {
        writeln!(out, "{},{},{},{}", f.grid.label(i), b.mean, b.lower, b.upper).unwrap();
    }
    out
}

pub fn trace_table(trace: &[TraceEntry]) -> String {
    let mut out = String::new();
    writeln!(out, "{:>6}{:>14}  status", "b", "min mean").unwrap();
    for e in trace {
        let (m, status) = match e.min_mean {
            None => ("-".to_string(), "skipped (inexact bin width)"),
            Some(m) => (format!("{m:.4}"), if e.satisfied { "ok" } else { "violated" }),
        };
        writeln!(out, "{:>6}{:>14}  {}", e.b, m, status).unwrap();
    }
    out
}

pub fn granularity_table(r: &GranularityResult, f: &MarginForecast) -> String {
    let rule = match r.rule {
        departure_core::GranularityRule::PaperLiteral => "paper",
        departure_core::GranularityRule::RelativeError => "relative",
    };
    let mut out = format!("epsilon = {}, rule = {rule}, chosen b = {}\n\n", r.epsilon, r.chosen_b);
    out.push_str(&trace_table(&r.trace));
    out.push('\n');
    out.push_str(&margin_table(f));
    out
}

pub fn gmm_table(grid: &BinGrid, model: &GmmModel, mass: &[f64]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "components = {}, log-likelihood = {:.6}, iterations = {}, converged = {}",
        model.components.len(),
        model.log_likelihood,
        model.iterations_used,
        model.converged
    )
    .unwrap();
    writeln!(out, "{:>4}{:>12}{:>12}{:>14}", "#", "weight", "mean", "stddev (s)").unwrap();
    for (i, c) in model.components.iter().enumerate() {
        let mean = departure_core::TimeOfDay::from_seconds(c.mean.round().clamp(0.0, 86_399.0) as u32)
            .map(|t| t.to_string())
            .unwrap_or_default();
        writeln!(out, "{:>4}{:>12.4}{:>12}{:>14.1}", i, c.weight, mean, c.variance.sqrt()).unwrap();
    }
    out.push('\n');
    writeln!(out, "{:<16}{:>12}", "interval", "mass").unwrap();
    for (i, m) in mass.iter().enumerate() {
        writeln!(out, "{:<16}{:>12.4}", grid.label(i), m).unwrap();
    }
    out
}

pub fn mass_csv(grid: &BinGrid, mass: &[f64]) -> String {
    let mut out = String::from("interval,mass\n");
    for (i, m) in mass.iter().enumerate() {
        writeln!(out, "{},{}", grid.label(i), m).unwrap();
    }
    out
}

pub fn report_table(r: &EvaluationReport) -> String {
    let mut out = format!("{}\n", r.label);
    let truth = r.ground_truth.as_deref();
    match truth {
        Some(_) => writeln!(out, "{:<16}{:>12}{:>12}{:>12}", "Time intervals", "Values", "Test", "erf values").unwrap(),
        None => writeln!(out, "{:<16}{:>12}{:>12}", "Time intervals", "Values", "erf values").unwrap(),
    }
    for i in 0..r.grid.bin_count() {
        let label = r.grid.label(i);
        match truth {
            Some(t) => writeln!(out, "{:<16}{:>12.4}{:>12.4}{:>12.4}", label, r.input_values[i], t[i], r.erf_values[i]).unwrap(),
            None => writeln!(out, "{:<16}{:>12.4}{:>12.4}", label, r.input_values[i], r.erf_values[i]).unwrap(),
        }
    }
    writeln!(out, "Average erf value: {:.4}", r.average_erf).unwrap();
    writeln!(out, "Normalized score on a number of bins: {:.4}", r.normalized_score).unwrap();
    out
}

pub fn report_csv(r: &EvaluationReport) -> String {
    let mut out = String::from("interval,value,test,erf\n");
    for i in 0..r.grid.bin_count() {
        let t = r.ground_truth.as_ref().map(|t| t[i].to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", r.grid.label(i), r.input_values[i], t, r.erf_values[i]).unwrap();
    }
    out
}

const W: f64 = 760.0;
const H: f64 = 360.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 80.0;

struct Frame {
    slots: usize,
    y_max: f64,
}

impl Frame {
    fn slot_width(&self) -> f64 {
        (W - LEFT - RIGHT) / self.slots as f64
    }
    fn x(&self, i: usize) -> f64 {
        LEFT + i as f64 * self.slot_width()
    }
    fn y(&self, v: f64) -> f64 {
        TOP + (H - TOP - BOTTOM) * (1.0 - v / self.y_max)
    }
}

fn nice_max(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|s| s * mag).find(|&s| s >= v).unwrap_or(10.0 * mag)
}

fn svg_open(title: &str, frame: &Frame, labels: &[String]) -> String {
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#).unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title)).unwrap();
    for t in 0..=4 {
        let v = frame.y_max * t as f64 / 4.0;
        let y = frame.y(v);
        writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, W - RIGHT).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, trim_float(v)).unwrap();
    }
    for (i, label) in labels.iter().enumerate() {
        let x = frame.x(i) + frame.slot_width() / 2.0;
        let y = H - BOTTOM + 14.0;
        writeln!(s, r#"<text x="{x:.2}" y="{y:.2}" text-anchor="end" transform="rotate(-45 {x:.2} {y:.2})">{}</text>"#, escape(label)).unwrap();
    }
    s
}

fn trim_float(v: f64) -> String {
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One box per bin spanning `[lower, upper]` with a tick at the mean.
pub fn margin_svg(title: &str, f: &MarginForecast) -> String {
    let frame = Frame {
        slots: f.bins.len(),
        y_max: nice_max(f.bins.iter().map(|b| b.upper).fold(0.0, f64::max)),
    };
    let mut s = svg_open(title, &frame, &f.grid.labels());
    let bw = frame.slot_width() * 0.6;
    for (i, b) in f.bins.iter().enumerate() {
        let x = frame.x(i) + (frame.slot_width() - bw) / 2.0;
        let (top, bottom) = (frame.y(b.upper), frame.y(b.lower));
        writeln!(s, r##"<rect x="{x:.2}" y="{top:.2}" width="{bw:.2}" height="{:.2}" fill="#9ecae1" stroke="#3182bd"/>"##, bottom - top).unwrap();
        let ym = frame.y(b.mean);
        writeln!(s, r##"<line x1="{x:.2}" y1="{ym:.2}" x2="{:.2}" y2="{ym:.2}" stroke="#08306b" stroke-width="2"/>"##, x + bw).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Bars for `values`, optionally overlaid with markers for `reference`.
pub fn bar_svg(title: &str, grid: &BinGrid, values: &[f64], reference: Option<&[f64]>) -> String {
    let peak = values
        .iter()
        .chain(reference.unwrap_or(&[]))
        .copied()
        .fold(0.0, f64::max);
    let frame = Frame {
        slots: values.len(),
        y_max: nice_max(peak),
    };
    let mut s = svg_open(title, &frame, &grid.labels());
    let bw = frame.slot_width() * 0.7;
    for (i, &v) in values.iter().enumerate() {
        let x = frame.x(i) + (frame.slot_width() - bw) / 2.0;
        let top = frame.y(v);
        writeln!(s, r##"<rect x="{x:.2}" y="{top:.2}" width="{bw:.2}" height="{:.2}" fill="#fdae6b" stroke="#e6550d"/>"##, frame.y(0.0) - top).unwrap();
    }
    if let Some(r) = reference {
        for (i, &v) in r.iter().enumerate() {
            let cx = frame.x(i) + frame.slot_width() / 2.0;
            writeln!(s, r##"<circle cx="{cx:.2}" cy="{:.2}" r="3.5" fill="#31a354"/>"##, frame.y(v)).unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nice_axis_tops() {
        assert_eq!(nice_max(0.0), 1.0);
        assert_eq!(nice_max(0.13), 0.2);
        assert_eq!(nice_max(19.25), 20.0);
        assert_eq!(nice_max(100.0), 100.0);
    }

    #[test]
    fn escapes_markup() {
        assert_eq!(escape("a<b&c>"), "a&lt;b&amp;c&gt;");
    }
}
