//! Report serialization: JSON, flattened CSV and SVG charts. Files are
//! written to a temporary name and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::{ExperimentReport, Outcome};

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("unknown output format {0:?}; expected json, csv or svg")]
    Format(String),
    #[error("report serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl FromStr for Format {
    type Err = EmitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "svg" => Ok(Self::Svg),
            other => Err(EmitError::Format(other.to_string())),
        }
    }
}

/// Writes the requested formats into `dir` and returns the created paths.
pub fn emit_report(report: &ExperimentReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, EmitError> {
    fs::create_dir_all(dir).map_err(|source| EmitError::Io { path: dir.to_path_buf(), source })?;
    let stem = report.spec.id.as_str();
    let mut written = Vec::new();
    for format in formats {
        match format {
            Format::Json => {
                let path = dir.join(format!("{stem}.json"));
                write_atomic(&path, to_json(report)?.as_bytes())?;
                written.push(path);
            }
            Format::Csv => {
                let path = dir.join(format!("{stem}.csv"));
                write_atomic(&path, to_csv(report).as_bytes())?;
                written.push(path);
            }
            Format::Svg => {
                for (name, svg) in to_svgs(report) {
                    let path = dir.join(format!("{stem}-{name}.svg"));
                    write_atomic(&path, svg.as_bytes())?;
                    written.push(path);
                }
            }
        }
    }
    Ok(written)
}

pub fn to_json(report: &ExperimentReport) -> Result<String, EmitError> {
    Ok(serde_json::to_string_pretty(report)?)
}

pub fn from_json(text: &str) -> Result<ExperimentReport, EmitError> {
    Ok(serde_json::from_str(text)?)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), EmitError> {
    let io = |source| EmitError::Io { path: path.to_path_buf(), source };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let mut file = fs::File::create(&tmp).map_err(io)?;
    file.write_all(bytes).and_then(|_| file.sync_all()).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

/// One row per (mitigator, configuration, metric); failed pairs get a
/// single row carrying the reason.
pub fn to_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("experiment,mitigator,config,x,metric,mean,n,status,calibration_us,correction_us\n");
    let id = report.spec.id;
    for r in &report.results {
        let (cal, cor) = (r.timings.calibration_us, r.timings.correction_us);
        match &r.outcome {
            Outcome::Ok { metrics } => {
                for (name, s) in metrics {
                    let _ = writeln!(
                        out,
                        "{id},{},{},{},{name},{},{},ok,{cal},{cor}",
                        csv_field(&r.mitigator),
                        csv_field(&r.config),
                        r.x,
                        s.mean,
                        s.samples.len()
                    );
                }
            }
            Outcome::Failed { reason } => {
                let _ = writeln!(
                    out,
                    "{id},{},{},{},,,0,{},{cal},{cor}",
                    csv_field(&r.mitigator),
                    csv_field(&r.config),
                    r.x,
                    csv_field(&format!("failed: {reason}"))
                );
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: (f64, f64, f64, f64) = (60.0, 20.0, 40.0, 50.0); // left, right, top, bottom

/// Named SVG documents: a line chart per metric when the report sweeps more
/// than one configuration, a grouped bar chart per metric otherwise, plus a
/// before/after distribution chart and an energy trace chart when present.
pub fn to_svgs(report: &ExperimentReport) -> Vec<(String, String)> {
    let mut charts = Vec::new();
    let configs = report.configs();
    for metric in report.metric_names() {
        let series: Vec<(String, Vec<(f64, f64)>)> = report
            .mitigators()
            .into_iter()
            .map(|m| {
                let points = report
                    .results
                    .iter()
                    .filter(|r| r.mitigator == m)
                    .filter_map(|r| r.metric(metric).map(|s| (r.x, s.mean)))
                    .collect();
                (m.to_string(), points)
            })
            .collect();
        let title = format!("{} {metric}", report.spec.id);
        let svg = if configs.len() > 1 {
            line_chart(&title, "configuration", metric, &series)
        } else {
            let bars: Vec<(String, Vec<f64>)> = series.into_iter().map(|(n, pts)| (n, pts.iter().map(|p| p.1).collect())).collect();
            bar_chart(&title, &[configs.first().copied().unwrap_or("").to_string()], &bars)
        };
        charts.push((sanitize(metric), svg));
    }
    if !report.distributions.is_empty() {
        let keys: Vec<String> = report.distributions[0].values.keys().cloned().collect();
        let series: Vec<(String, Vec<f64>)> = report
            .distributions
            .iter()
            .map(|d| (d.label.clone(), keys.iter().map(|k| d.values.get(k).copied().unwrap_or(0.0)).collect()))
            .collect();
        charts.push(("distributions".into(), bar_chart(&format!("{} distributions", report.spec.id), &keys, &series)));
    }
    if !report.traces.is_empty() {
        let series: Vec<(String, Vec<(f64, f64)>)> = report
            .traces
            .iter()
            .map(|t| (t.label.clone(), t.energies.iter().enumerate().map(|(i, &e)| (i as f64, e)).collect()))
            .collect();
        charts.push(("trace".into(), line_chart(&format!("{} energy", report.spec.id), "sweep", "energy", &series)));
    }
    charts
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if (hi - lo).abs() < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn frame(title: &str, x_label: &str, y_label: &str, y: (f64, f64)) -> String {
    let (l, r, t, b) = MARGIN;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n\
         <line x1=\"{l}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>\n",
        W / 2.0,
        escape(title),
        H - b,
        W - r,
        H - b,
        H - b,
        (l + W - r) / 2.0,
        H - 8.0,
        escape(x_label),
        (t + H - b) / 2.0,
        (t + H - b) / 2.0,
        escape(y_label),
    );
    for i in 0..=4 {
        let v = y.0 + (y.1 - y.0) * i as f64 / 4.0;
        let py = H - b - (H - t - b) * i as f64 / 4.0;
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>", l - 4.0, py + 4.0, fmt_tick(v));
        let _ = writeln!(s, "<line x1=\"{l}\" y1=\"{py}\" x2=\"{}\" y2=\"{py}\" stroke=\"#ddd\"/>", W - r);
    }
    s
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn legend(s: &mut String, names: impl Iterator<Item = String>) {
    for (i, name) in names.enumerate() {
        let y = MARGIN.2 + 14.0 * i as f64;
        let x = W - MARGIN.1 - 150.0;
        let _ = writeln!(s, "<rect x=\"{x}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>", y - 9.0, PALETTE[i % PALETTE.len()]);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{y}\">{}</text>", x + 14.0, escape(&name));
    }
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (l, r, t, b) = MARGIN;
    let all = || series.iter().flat_map(|(_, pts)| pts.iter());
    let x = bounds(all().map(|p| p.0));
    let y = bounds(all().map(|p| p.1));
    let px = |v: f64| l + (v - x.0) / (x.1 - x.0) * (W - l - r);
    let py = |v: f64| H - b - (v - y.0) / (y.1 - y.0) * (H - t - b);
    let mut s = frame(title, x_label, y_label, y);
    let mut ticks: Vec<f64> = all().map(|p| p.0).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    if ticks.len() <= 20 {
        for v in ticks {
            let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", px(v), H - b + 14.0, fmt_tick(v).trim_end_matches('0').trim_end_matches('.'));
        }
    }
    for (i, (_, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts.iter().filter(|p| p.1.is_finite()).map(|&(a, v)| format!("{:.2},{:.2}", px(a), py(v))).collect();
        let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>", path.join(" "));
        for p in &path {
            let (cx, cy) = p.split_once(',').unwrap_or(("0", "0"));
            let _ = writeln!(s, "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"3\" fill=\"{color}\"/>");
        }
    }
    legend(&mut s, series.iter().map(|(n, _)| n.clone()));
    s.push_str("</svg>\n");
    s
}

/// Grouped bars: one group per category, one bar per series.
pub fn bar_chart(title: &str, categories: &[String], series: &[(String, Vec<f64>)]) -> String {
    let (l, r, t, b) = MARGIN;
    let y = bounds(series.iter().flat_map(|(_, v)| v.iter().copied()).chain([0.0]));
    let y = (y.0.min(0.0), y.1);
    let py = |v: f64| H - b - (v - y.0) / (y.1 - y.0) * (H - t - b);
    let mut s = frame(title, "outcome", "value", y);
    let group = (W - l - r) / categories.len().max(1) as f64;
    let bar = group * 0.8 / series.len().max(1) as f64;
    for (c, name) in categories.iter().enumerate() {
        let gx = l + group * c as f64 + group * 0.1;
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", gx + group * 0.4, H - b + 14.0, escape(name));
        for (i, (_, values)) in series.iter().enumerate() {
            let v = values.get(c).copied().unwrap_or(0.0);
            if !v.is_finite() {
                continue;
            }
            let (top, bottom) = (py(v.max(0.0)), py(v.min(0.0)));
            let _ = writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{top:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                gx + bar * i as f64,
                bar.max(1.0),
                (bottom - top).max(0.0),
                PALETTE[i % PALETTE.len()]
            );
        }
    }
    legend(&mut s, series.iter().map(|(n, _)| n.clone()));
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_parse() {
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
        assert_eq!(" svg".parse::<Format>().unwrap(), Format::Svg);
        assert!("png".parse::<Format>().is_err());
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("filter:0.01,0.99"), "\"filter:0.01,0.99\"");
        assert_eq!(csv_field("raw"), "raw");
        assert_eq!(csv_field("a\"b"), "\"a\"\"b\"");
    }

    #[test]
    fn charts_are_well_formed() {
        let line = line_chart("t<1>", "x", "y", &[("a".into(), vec![(1.0, 0.5), (2.0, 0.7)]), ("b".into(), vec![])]);
        assert!(line.starts_with("<svg") && line.ends_with("</svg>\n"));
        assert!(line.contains("t&lt;1&gt;"));
        assert_eq!(line.matches("<polyline").count(), 2);
        let bars = bar_chart("d", &["00".into(), "11".into()], &[("raw".into(), vec![0.4, 0.6]), ("f".into(), vec![0.5, f64::NAN])]);
        assert_eq!(bars.matches("<rect x=").count(), 3 + 2);
    }
}
