//! Series files, aggregate reports, and static SVG charts.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so parsing
//! a file back reproduces the in-memory values bit for bit. Charts are drawn
//! from series read back from disk.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::metrics::SeriesRow;
use crate::montecarlo::AggregateReport;

pub const SERIES_HEADER: [&str; 5] = ["t", "rate", "rel_equity", "defaulted_frac", "gamma"];

pub fn write_series<W: Write>(writer: W, series: &[SeriesRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SERIES_HEADER)?;
    for r in series {
        w.write_record([
            r.t.to_string(),
            r.rate.to_string(),
            r.rel_equity.to_string(),
            r.defaulted_frac.to_string(),
            r.gamma.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_series<R: Read>(reader: R) -> Result<Vec<SeriesRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SERIES_HEADER {
        bail!("unexpected series header {header:?}");
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let f = |k: usize| -> Result<f64> {
            rec.get(k)
                .context("short row")?
                .parse()
                .with_context(|| format!("row {}: bad `{}`", i + 2, SERIES_HEADER[k]))
        };
        rows.push(SeriesRow {
            t: rec.get(0).context("short row")?.parse()?,
            rate: f(1)?,
            rel_equity: f(2)?,
            defaulted_frac: f(3)?,
            gamma: f(4)?,
        });
    }
    Ok(rows)
}

pub fn save_series(path: &Path, series: &[SeriesRow]) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_series(std::io::BufWriter::new(file), series)
}

pub fn load_series(path: &Path) -> Result<Vec<SeriesRow>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_series(std::io::BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

pub fn save_report(path: &Path, report: &AggregateReport) -> Result<()> {
    let mut text = report.to_json();
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn load_report(path: &Path) -> Result<AggregateReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Panel {
    Rate,
    RelEquity,
    DefaultedFrac,
    Gamma,
}

impl Panel {
    pub const ALL: [Panel; 4] = [Panel::Rate, Panel::RelEquity, Panel::DefaultedFrac, Panel::Gamma];

    pub fn name(&self) -> &'static str {
        match self {
            Panel::Rate => "rate",
            Panel::RelEquity => "rel_equity",
            Panel::DefaultedFrac => "defaulted_frac",
            Panel::Gamma => "gamma",
        }
    }

    fn label(&self) -> &'static str {
        match self {
            Panel::Rate => "interest rate r(t)",
            Panel::RelEquity => "relative equity",
            Panel::DefaultedFrac => "fraction of defaulted banks",
            Panel::Gamma => "depricing factor",
        }
    }

    pub fn value(&self, row: &SeriesRow) -> f64 {
        match self {
            Panel::Rate => row.rate,
            Panel::RelEquity => row.rel_equity,
            Panel::DefaultedFrac => row.defaulted_frac,
            Panel::Gamma => row.gamma,
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One panel versus iteration, one polyline per named curve.
pub fn render_chart(panel: Panel, curves: &[(String, Vec<SeriesRow>)]) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (70.0, 150.0, 30.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);

    let t_max = curves
        .iter()
        .flat_map(|(_, s)| s.iter().map(|r| r.t))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let values = curves
        .iter()
        .flat_map(|(_, s)| s.iter().map(|r| panel.value(r)))
        .filter(|v| v.is_finite());
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        let pad = hi.abs().max(1.0) * 0.05;
        lo -= pad;
        hi += pad;
    }
    let x = |t: f64| left + pw * t / t_max;
    let y = |v: f64| top + ph * (1.0 - (v - lo) / (hi - lo));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let tv = t_max * f;
        let vv = lo + (hi - lo) * f;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x(tv),
            top + ph + 16.0,
            tv.round()
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.4}</text>"#,
            left - 6.0,
            y(vv) + 4.0,
            vv
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration t</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        panel.label()
    );
    for (i, (name, series)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = series
            .iter()
            .filter(|r| panel.value(r).is_finite())
            .map(|r| format!("{:.2},{:.2}", x(r.t as f64), y(panel.value(r))))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            left + pw + 10.0,
            left + pw + 30.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            left + pw + 36.0,
            ly + 4.0,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes `<panel>.svg` into `dir` for every panel, reading each curve's
/// series from its file.
pub fn write_charts(dir: &Path, curves: &[(String, &Path)]) -> Result<Vec<std::path::PathBuf>> {
    let loaded = curves
        .iter()
        .map(|(name, path)| Ok((name.clone(), load_series(path)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut written = Vec::new();
    for panel in Panel::ALL {
        let path = dir.join(format!("{}.svg", panel.name()));
        fs::write(&path, render_chart(panel, &loaded)).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}
