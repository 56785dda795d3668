//! Metric suite and the cross-validation runner.

mod cv;
mod metrics;

pub use cv::{
    run_cv, FoldContext, FoldMetrics, FoldTrainer, MetricSummary, MetricsReport,
    REPORT_SCHEMA_VERSION,
};
pub use metrics::{cohens_kappa, f1_macro, f1_weighted, gmean, mcc, ConfusionMatrix};
