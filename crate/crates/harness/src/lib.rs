//! Experiment driver for the `tsmtl` solvers: seeded splits, λ grid search,
//! step-size sweeps over both ADMM variants, trace and summary CSVs, SVG
//! charts and a markdown report.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod report;
pub mod summary;
pub mod svg;

pub use config::{ConfigBuilder, DatasetSource, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use experiment::{grid_search, run_sweep, GridRow, GridSearch, RunRecord, Sweep};
pub use io::{emit_summary_csv, emit_trace_csv, parse_summary_csv, parse_trace_csv};
pub use summary::{summarize, SummaryRow};
