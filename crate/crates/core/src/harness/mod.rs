//! Evaluation protocol, dataset files, model files and configuration.

mod config;
mod dataset;
mod eval;
mod modelfile;
mod report;

pub use config::{parse_utc_offset, LagSetting, RunConfig};
pub use dataset::{
    format_timestamp, load_dataset, parse_timestamp, read_dataset, save_dataset, write_dataset,
    Dataset, IngestOptions,
};
pub use eval::{
    accuracy_with_tolerance, common_samples, incremental_splits, mean_absolute_error,
    run_benchmark, CellFailure, CellPrediction, DaySplit, EvalConfig, EvalMethod, EvalReport,
    EvalRow,
};
pub use modelfile::{
    load_model, occupancy_model_to_string, parse_model, save_model, svr_model_to_string,
    SavedModel, FORMAT_VERSION,
};
pub use report::{
    format_report_table, write_components, write_lag_sweep, write_prediction, write_report,
    write_series,
};
