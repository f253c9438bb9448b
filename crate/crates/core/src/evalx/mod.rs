//! Error metrics, CDFs, direct-regression baselines, the ablation runner and
//! report files.

pub mod ablation;
pub mod baselines;
pub mod cdf;
pub mod metrics;
pub mod report;
pub mod tracking;

pub use ablation::{ablation_run, AblationCell, AblationRow, AblationTable, ScenarioData};
pub use baselines::{baseline_predict, baseline_train, BaselineModel, BaselineSpec};
pub use cdf::{cdf, CdfCurve};
pub use metrics::{euclid_errors, mae, median, r2, rmse, ErrorSeries, MetricsRecord};
pub use report::{
    metrics_row, paper_reference_csv, parse_table_csv, render, report_emit, table_csv, EvalResults,
    MethodEval, PAPER_TABLE, RAW_RESULTS_FILE, TABLE_DATASETS,
};
pub use tracking::{
    evaluate_tracking, track_dataset, trajectory_streams, PooledEval, TrackMode, TrackedTrajectory,
};
