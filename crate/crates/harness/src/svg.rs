//! Self-contained SVG charts: one `<polyline>` per line series, one
//! `<rect>` per bar.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use tsmtl::{TraceRecord64, Variant};

use crate::error::{HarnessError, Result};
use crate::experiment::{trace_path, SUMMARY_FILE};
use crate::io::{parse_summary_csv, parse_trace_csv, write_file};
use crate::summary::{mean_std, SummaryRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

/// Grouped bars: `values[g][s]` is `(height, deviation)` of series `s` in
/// group `g`, or `None` for a missing bar.
#[derive(Debug, Clone)]
pub struct BarChart {
    pub title: String,
    pub y_label: String,
    pub log_y: bool,
    pub groups: Vec<String>,
    pub series: Vec<String>,
    pub values: Vec<Vec<Option<(f64, f64)>>>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    /// Covers every finite value; in log mode non-positive values are
    /// pinned to the smallest positive one.
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let vals: Vec<f64> = values
            .filter(|v| v.is_finite() && (!log || *v > 0.0))
            .map(|v| if log { v.log10() } else { v })
            .collect();
        let (mut lo, mut hi) = vals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Self { lo, hi, log }
    }

    fn pos(&self, v: f64) -> f64 {
        let v = if self.log {
            if v > 0.0 {
                v.log10()
            } else {
                self.lo
            }
        } else {
            v
        };
        ((v - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }

    fn label(&self, frac: f64) -> String {
        let v = self.lo + frac * (self.hi - self.lo);
        if self.log {
            format!("1e{v:.1}")
        } else {
            format!("{v:.3e}")
        }
    }
}

fn frame(s: &mut String, title: &str, x_label: &str, y_label: &str, y: &Axis) {
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>
<text x="{}" y="{}" text-anchor="middle">{}</text>
<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>
<line x1="{LEFT}" y1="{}" x2="{}" y2="{}" stroke="black"/>
<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>
"#,
        WIDTH / 2.0,
        escape(title),
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        HEIGHT - 12.0,
        escape(x_label),
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
        escape(y_label),
        HEIGHT - BOTTOM,
        WIDTH - RIGHT,
        HEIGHT - BOTTOM,
        HEIGHT - BOTTOM,
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let py = py(f);
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT - 4.0,
            LEFT - 6.0,
            py + 4.0,
            y.label(f)
        );
    }
}

fn px(frac: f64) -> f64 {
    LEFT + frac * (WIDTH - LEFT - RIGHT)
}

fn py(frac: f64) -> f64 {
    HEIGHT - BOTTOM - frac * (HEIGHT - TOP - BOTTOM)
}

fn legend(s: &mut String, names: &[String]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 10.0;
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{}" width="12" height="12" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            y - 10.0,
            COLORS[i % COLORS.len()],
            x + 16.0,
            y,
            escape(name)
        );
    }
}

impl LineChart {
    pub fn render(&self) -> Result<String> {
        if self.series.is_empty() || self.series.iter().all(|s| s.points.is_empty()) {
            return Err(HarnessError::Empty("plot"));
        }
        let pts = || self.series.iter().flat_map(|s| s.points.iter());
        let x = Axis::fit(pts().map(|p| p.0), false);
        let y = Axis::fit(pts().map(|p| p.1), self.log_y);
        let mut s = String::new();
        frame(&mut s, &self.title, &self.x_label, &self.y_label, &y);
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{:.0}</text>"#,
                px(f),
                HEIGHT - BOTTOM + 16.0,
                x.lo + f * (x.hi - x.lo)
            );
        }
        for (i, series) in self.series.iter().enumerate() {
            let coords: Vec<String> = series
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(a, b)| format!("{:.2},{:.2}", px(x.pos(a)), py(y.pos(b))))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
                COLORS[i % COLORS.len()],
                coords.join(" "),
                escape(&series.name)
            );
        }
        let names: Vec<String> = self.series.iter().map(|s| s.name.clone()).collect();
        legend(&mut s, &names);
        s.push_str("</svg>\n");
        Ok(s)
    }
}

impl BarChart {
    pub fn render(&self) -> Result<String> {
        let bars = || self.values.iter().flatten().flatten();
        if self.groups.is_empty() || self.series.is_empty() || bars().next().is_none() {
            return Err(HarnessError::Empty("plot"));
        }
        let y = Axis::fit(
            bars().flat_map(|&(h, d)| [h, h + d, if self.log_y { h } else { (h - d).min(0.0) }]),
            self.log_y,
        );
        let mut s = String::new();
        frame(&mut s, &self.title, "rho", &self.y_label, &y);
        let group_w = (WIDTH - LEFT - RIGHT) / self.groups.len() as f64;
        let bar_w = group_w * 0.8 / self.series.len() as f64;
        let base = py(if self.log_y { 0.0 } else { y.pos(0.0) });
        for (g, name) in self.groups.iter().enumerate() {
            let gx = LEFT + group_w * g as f64 + group_w * 0.1;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
                gx + group_w * 0.4,
                HEIGHT - BOTTOM + 16.0,
                escape(name)
            );
            for (k, value) in self.values[g].iter().enumerate() {
                let Some((h, d)) = *value else { continue };
                let x = gx + bar_w * k as f64;
                let top = py(y.pos(h));
                let _ = writeln!(
                    s,
                    r#"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{}: {h}</title></rect>"#,
                    top.min(base),
                    bar_w * 0.9,
                    (base - top).abs(),
                    COLORS[k % COLORS.len()],
                    escape(&self.series[k])
                );
                let cx = x + bar_w * 0.45;
                let lo = py(y.pos(h - d));
                let hi = py(y.pos(h + d));
                let _ = writeln!(
                    s,
                    r#"<line x1="{cx:.2}" y1="{lo:.2}" x2="{cx:.2}" y2="{hi:.2}" stroke="black"/>"#
                );
            }
        }
        legend(&mut s, &self.series);
        s.push_str("</svg>\n");
        Ok(s)
    }
}

/// Per-iteration mean over several traces; an iteration counts only the
/// traces that reached it.
pub fn mean_curve(
    traces: &[&[TraceRecord64]],
    value: impl Fn(&TraceRecord64) -> Option<f64>,
) -> Vec<(f64, f64)> {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for trace in traces {
        for r in trace.iter() {
            if let Some(v) = value(r) {
                let e = acc.entry(r.iter).or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
            }
        }
    }
    acc.into_iter()
        .map(|(k, (sum, n))| (k as f64, sum / n as f64))
        .collect()
}

type Metric = (
    &'static str,
    &'static str,
    bool,
    fn(&TraceRecord64) -> Option<f64>,
);

const METRICS: [Metric; 3] = [
    ("residual", "primal residual", true, |r| Some(r.r_total)),
    ("nmse", "validation nMSE", false, |r| r.val_nmse),
    ("objective", "objective", false, |r| Some(r.objective)),
];

/// Reads `summary.csv` and the trace files of a sweep output directory and
/// writes every chart into `out`. Returns the written paths.
pub fn plot_dir(sweep_dir: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let rows = parse_summary_csv(&sweep_dir.join(SUMMARY_FILE))?;
    if rows.is_empty() {
        return Err(HarnessError::Empty("plot"));
    }
    let mut traces = Vec::with_capacity(rows.len());
    for r in &rows {
        traces.push(parse_trace_csv(&trace_path(
            sweep_dir, r.variant, r.rho, r.repeat,
        ))?);
    }
    plot_runs(&rows, &traces, out)
}

/// `rows[i]` summarises `traces[i]`.
pub fn plot_runs(
    rows: &[SummaryRow],
    traces: &[Vec<TraceRecord64>],
    out: &Path,
) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(HarnessError::Empty("plot"));
    }
    let mut variants: Vec<Variant> = Vec::new();
    let mut rhos: Vec<f64> = Vec::new();
    for r in rows {
        if !variants.contains(&r.variant) {
            variants.push(r.variant);
        }
        if !rhos.contains(&r.rho) {
            rhos.push(r.rho);
        }
    }
    let mut written = Vec::new();
    for &rho in &rhos {
        for (stem, label, log_y, value) in METRICS {
            let series: Vec<Series> = variants
                .iter()
                .map(|&v| {
                    let runs: Vec<&[TraceRecord64]> = rows
                        .iter()
                        .zip(traces)
                        .filter(|(r, _)| r.variant == v && r.rho == rho)
                        .map(|(_, t)| t.as_slice())
                        .collect();
                    Series {
                        name: v.as_str().into(),
                        points: mean_curve(&runs, value),
                    }
                })
                .collect();
            if series.iter().all(|s| s.points.is_empty()) {
                continue;
            }
            let chart = LineChart {
                title: format!("{label}, rho = {rho}"),
                x_label: "iteration".into(),
                y_label: label.into(),
                log_y,
                series,
            };
            let path = out.join(format!("{stem}_rho{rho}.svg"));
            write_file(&path, &chart.render()?)?;
            written.push(path);
        }
    }
    let bar_metrics: [(&str, &str, bool, fn(&SummaryRow) -> Option<f64>); 2] = [
        ("last100_residual", "primal residual, last 100", true, |r| {
            r.r_total_mean
        }),
        ("last100_nmse", "validation nMSE, last 100", false, |r| {
            r.val_nmse_mean
        }),
    ];
    for (stem, label, log_y, value) in bar_metrics {
        let values: Vec<Vec<Option<(f64, f64)>>> = rhos
            .iter()
            .map(|&rho| {
                variants
                    .iter()
                    .map(|&v| {
                        let vals: Option<Vec<f64>> = rows
                            .iter()
                            .filter(|r| r.variant == v && r.rho == rho)
                            .map(value)
                            .collect();
                        vals.as_deref().and_then(mean_std)
                    })
                    .collect()
            })
            .collect();
        let chart = BarChart {
            title: label.into(),
            y_label: label.into(),
            log_y,
            groups: rhos.iter().map(|r| r.to_string()).collect(),
            series: variants.iter().map(|v| v.as_str().to_string()).collect(),
            values,
        };
        match chart.render() {
            Ok(svg) => {
                let path = out.join(format!("{stem}.svg"));
                write_file(&path, &svg)?;
                written.push(path);
            }
            Err(HarnessError::Empty(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(written)
}
