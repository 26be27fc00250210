//! Metrics, binomial intervals, inter-rater agreement and benchmark runs.

pub mod benchmark;
pub mod binomial;
pub mod kappa;
pub mod metrics;

pub use benchmark::{benchmark, eval_splits, BenchmarkSource, RunPredictions};
pub use binomial::clopper_pearson;
pub use kappa::{cohens_kappa, kappa_bootstrap_ci, KappaResult};
pub use metrics::{
    confusion, fmt2, macro_metrics, render_class_table, render_macro_table, round2, ClassMetrics, ConfusionMatrix,
    MacroMetrics, MetricsReport, ReportMeta, CONFIDENCE,
};
