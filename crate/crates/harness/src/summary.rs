use tsmtl::{TraceRecord64, Variant};

/// Records averaged at the end of a trace.
pub const WINDOW: usize = 100;

/// Per-run aggregate over the last [`WINDOW`] recorded iterations.
///
/// Statistics are `None` when the run produced no records (it diverged on
/// the first iteration) or, for nMSE, when validation was off.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub variant: Variant,
    pub rho: f64,
    pub repeat: usize,
    pub r_total_mean: Option<f64>,
    pub r_total_std: Option<f64>,
    pub val_nmse_mean: Option<f64>,
    pub val_nmse_std: Option<f64>,
    pub final_objective: Option<f64>,
    pub diverged: bool,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

pub fn window(trace: &[TraceRecord64]) -> &[TraceRecord64] {
    &trace[trace.len().saturating_sub(WINDOW)..]
}

pub fn summarize(
    variant: Variant,
    rho: f64,
    repeat: usize,
    trace: &[TraceRecord64],
    diverged: bool,
) -> SummaryRow {
    let tail = window(trace);
    let r: Vec<f64> = tail.iter().map(|t| t.r_total).collect();
    let nmse: Option<Vec<f64>> = tail.iter().map(|t| t.val_nmse).collect();
    let r_stats = mean_std(&r);
    let nmse_stats = nmse.as_deref().and_then(mean_std);
    SummaryRow {
        variant,
        rho,
        repeat,
        r_total_mean: r_stats.map(|s| s.0),
        r_total_std: r_stats.map(|s| s.1),
        val_nmse_mean: nmse_stats.map(|s| s.0),
        val_nmse_std: nmse_stats.map(|s| s.1),
        final_objective: trace.last().map(|t| t.objective),
        diverged,
    }
}
