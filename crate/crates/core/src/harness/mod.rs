//! Repeated-split scenario evaluation and report emission.
//!
//! Each (repeat, scenario) pair is an independent job seeded with
//! `base_seed + repeat`. Jobs run on the rayon pool and are aggregated in job
//! order, so reports do not depend on the number of threads.

mod config;
mod report;
mod run;

pub use config::{
    DataSource, ExperimentConfig, ExplainSettings, MlpSpec, ModelEntry, ModelSpec, SelectionMethod, TradeoffTarget,
    TuneSettings,
};
pub use report::{
    emit_report, load_report, CellStatus, DatasetSummary, EvalCell, EvalReport, MeanSd, MethodSummary, ReportFormat,
    CURVE_CSV, REPORT_FORMAT_VERSION, REPORT_JSON, TABLE_CSV, TRADEOFF_CSV,
};
pub use run::{
    complexity, explain_model, fit_entry, fit_model, holdout_split, load_experiment_data, rank_features,
    run_evaluation, ExperimentData, Explanation, MethodRanking, RIDGE_RANK_ALPHA,
};
