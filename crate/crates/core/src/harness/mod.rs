//! Experiment orchestration: configuration, training, evaluation along the
//! generalization axes, baseline comparison and reporting.

mod config;
mod experiment;
mod report;

pub use config::{ExperimentConfig, InstanceSpec};
pub use experiment::{
    evaluate, obtain_model, reduce_with, run_baseline_comparison, run_generalization,
    run_training, test_groups, train_on, training_instances, Axis, ExperimentOutput, TestGroup,
    TrainingOutcome, TrainingSummary,
};
pub use report::{
    compute_gap, emit_report, records_from_csv, records_to_csv, sort_records, summarize,
    summary_to_json, GroupSummary, MetricsRecord, Summary, CSV_HEADER,
};
