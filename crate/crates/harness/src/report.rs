//! Markdown table of a sweep: per `(variant, ρ)`, the mean and spread across
//! repeats of each run's last-100 statistics.

use std::fmt::Write as _;

use tsmtl::Variant;

use crate::error::{HarnessError, Result};
use crate::summary::{mean_std, SummaryRow};

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub variant: Variant,
    pub rho: f64,
    pub runs: usize,
    pub diverged: usize,
    /// Mean and std across non-diverged repeats.
    pub r_total: Option<(f64, f64)>,
    pub val_nmse: Option<(f64, f64)>,
}

/// Groups in first-appearance order.
pub fn aggregate(rows: &[SummaryRow]) -> Vec<Aggregate> {
    let mut keys: Vec<(Variant, f64)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.variant, r.rho)) {
            keys.push((r.variant, r.rho));
        }
    }
    keys.into_iter()
        .map(|(variant, rho)| {
            let group: Vec<&SummaryRow> = rows
                .iter()
                .filter(|r| r.variant == variant && r.rho == rho)
                .collect();
            let ok: Vec<&&SummaryRow> = group.iter().filter(|r| !r.diverged).collect();
            let stat = |f: fn(&SummaryRow) -> Option<f64>| {
                let v: Option<Vec<f64>> = ok.iter().map(|r| f(r)).collect();
                v.as_deref().and_then(mean_std)
            };
            Aggregate {
                variant,
                rho,
                runs: group.len(),
                diverged: group.len() - ok.len(),
                r_total: stat(|r| r.r_total_mean),
                val_nmse: stat(|r| r.val_nmse_mean),
            }
        })
        .collect()
}

fn cell(v: Option<(f64, f64)>) -> String {
    match v {
        Some((m, s)) => format!("{m:.4e} ± {s:.1e}"),
        None => "n/a".into(),
    }
}

pub fn render_report(rows: &[SummaryRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(HarnessError::Empty("report"));
    }
    let mut s = String::new();
    s.push_str("| variant | rho | runs | diverged | r_total (last 100) | val nMSE (last 100) |\n");
    s.push_str("|---|---|---|---|---|---|\n");
    for a in aggregate(rows) {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} |",
            a.variant,
            a.rho,
            a.runs,
            a.diverged,
            cell(a.r_total),
            cell(a.val_nmse)
        );
    }
    Ok(s)
}
