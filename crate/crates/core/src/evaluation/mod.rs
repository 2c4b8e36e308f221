//! Cross-validated comparison of fitted models: PCC, RMSE and outlier ratio
//! over source-aware folds.

mod cv;
mod folds;
mod metrics;

pub use cv::{
    compare_models, cross_validate, cross_validate_with_plan, write_comparison_csv,
    write_residuals_csv, AggregateMetrics, Comparison, EvalOptions, EvalReport, FoldReport,
    Residual, COMPARISON_CSV_HEADER, RESIDUAL_CSV_HEADER,
};
pub use folds::{make_folds, FoldPlan};
pub use metrics::{outlier_ratio, pcc, rmse, DEFAULT_OUTLIER_THRESHOLD};
