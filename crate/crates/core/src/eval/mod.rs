//! Regression metrics, per-phase breakdowns, multi-run aggregation and
//! paired bootstrap comparison.

mod bootstrap;
mod metrics;
mod report;

pub use bootstrap::{significance, DEFAULT_RESAMPLES, MIN_PAIRS};
pub use metrics::{mae, pearson, r2, rmse};
pub use report::{
    compare, emit_report, evaluate, mean_std, read_report, render_table, AggregateRow, EvalReport, MeanStd, MetricRow,
    ModelEval, ModelRuns, ALL_PHASES, METRICS, NA, REPORT_FORMAT,
};
