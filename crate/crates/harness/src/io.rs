//! Trace and summary CSV files.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing
//! an emitted file gives back the exact values.

use std::fs;
use std::path::Path;

use tsmtl::{TraceRecord64, Variant};

use crate::error::{HarnessError, Result};
use crate::summary::SummaryRow;

pub const TRACE_HEADER: [&str; 8] = [
    "iter",
    "objective",
    "r_eq",
    "r_smooth",
    "r_pi",
    "r_total",
    "val_nmse",
    "elapsed_seconds",
];

pub const SUMMARY_HEADER: [&str; 9] = [
    "variant",
    "rho",
    "repeat",
    "r_total_mean",
    "r_total_std",
    "val_nmse_mean",
    "val_nmse_std",
    "final_objective",
    "diverged",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn trace_to_string(trace: &[TraceRecord64]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| HarnessError::Malformed {
        path: "<memory>".into(),
        message: e.to_string(),
    };
    w.write_record(TRACE_HEADER).map_err(wrap)?;
    for r in trace {
        w.write_record([
            r.iter.to_string(),
            r.objective.to_string(),
            r.r_eq.to_string(),
            r.r_smooth.to_string(),
            r.r_pi.to_string(),
            r.r_total.to_string(),
            opt(r.val_nmse),
            r.elapsed_seconds.to_string(),
        ])
        .map_err(wrap)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Malformed {
        path: "<memory>".into(),
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes a trace. An empty trace still gets its header line.
pub fn emit_trace_csv(trace: &[TraceRecord64], path: &Path) -> Result<()> {
    write_file(path, &trace_to_string(trace)?)
}

pub fn summary_to_string(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| HarnessError::Malformed {
        path: "<memory>".into(),
        message: e.to_string(),
    };
    w.write_record(SUMMARY_HEADER).map_err(wrap)?;
    for r in rows {
        w.write_record([
            r.variant.as_str().to_string(),
            r.rho.to_string(),
            r.repeat.to_string(),
            opt(r.r_total_mean),
            opt(r.r_total_std),
            opt(r.val_nmse_mean),
            opt(r.val_nmse_std),
            opt(r.final_objective),
            r.diverged.to_string(),
        ])
        .map_err(wrap)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Malformed {
        path: "<memory>".into(),
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn emit_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(HarnessError::Empty("summarise"));
    }
    write_file(path, &summary_to_string(rows)?)
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    }
    fs::write(path, text).map_err(HarnessError::io(path))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(HarnessError::csv(path))
}

fn check_header(path: &Path, found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(HarnessError::Malformed {
            path: path.into(),
            message: format!(
                "header `{}` does not match `{}`",
                found.iter().collect::<Vec<_>>().join(","),
                expected.join(",")
            ),
        });
    }
    Ok(())
}

struct Fields<'a> {
    path: &'a Path,
    record: &'a csv::StringRecord,
    line: u64,
}

impl Fields<'_> {
    fn raw(&self, i: usize, name: &str) -> Result<&str> {
        self.record.get(i).ok_or_else(|| self.err(name, "missing"))
    }

    fn err(&self, name: &str, what: &str) -> HarnessError {
        HarnessError::Malformed {
            path: self.path.into(),
            message: format!("line {}: column {name} {what}", self.line),
        }
    }

    fn parse<V: std::str::FromStr>(&self, i: usize, name: &str) -> Result<V> {
        let raw = self.raw(i, name)?;
        raw.parse()
            .map_err(|_| self.err(name, &format!("has unparsable value `{raw}`")))
    }

    fn opt(&self, i: usize, name: &str) -> Result<Option<f64>> {
        if self.raw(i, name)?.is_empty() {
            Ok(None)
        } else {
            self.parse(i, name).map(Some)
        }
    }
}

pub fn parse_trace_csv(path: &Path) -> Result<Vec<TraceRecord64>> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(HarnessError::csv(path))?.clone();
    check_header(path, &header, &TRACE_HEADER)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(HarnessError::csv(path))?;
        let line = record.position().map_or(0, |p| p.line());
        let f = Fields {
            path,
            record: &record,
            line,
        };
        out.push(TraceRecord64 {
            iter: f.parse(0, "iter")?,
            objective: f.parse(1, "objective")?,
            r_eq: f.parse(2, "r_eq")?,
            r_smooth: f.parse(3, "r_smooth")?,
            r_pi: f.parse(4, "r_pi")?,
            r_total: f.parse(5, "r_total")?,
            val_nmse: f.opt(6, "val_nmse")?,
            elapsed_seconds: f.parse(7, "elapsed_seconds")?,
        });
    }
    Ok(out)
}

pub fn parse_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(HarnessError::csv(path))?.clone();
    check_header(path, &header, &SUMMARY_HEADER)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(HarnessError::csv(path))?;
        let line = record.position().map_or(0, |p| p.line());
        let f = Fields {
            path,
            record: &record,
            line,
        };
        let variant: Variant = f
            .raw(0, "variant")?
            .parse()
            .map_err(|_| f.err("variant", "is not a solver variant"))?;
        out.push(SummaryRow {
            variant,
            rho: f.parse(1, "rho")?,
            repeat: f.parse(2, "repeat")?,
            r_total_mean: f.opt(3, "r_total_mean")?,
            r_total_std: f.opt(4, "r_total_std")?,
            val_nmse_mean: f.opt(5, "val_nmse_mean")?,
            val_nmse_std: f.opt(6, "val_nmse_std")?,
            final_objective: f.opt(7, "final_objective")?,
            diverged: f.parse(8, "diverged")?,
        });
    }
    Ok(out)
}
