//! Experiment configs, seeded runs, metrics files and summaries.
//!
//! A run trains one multi-head Q-table per seed. Tasks take turns, one
//! episode each, until the step budget is spent; after every episode the
//! task's success ratio is updated, and at each checkpoint every task gets
//! greedy evaluation rollouts. Seeds run in parallel and share nothing.

mod config;
mod metrics;
mod run;
mod summary;

pub use config::{load_config, EnvKind, ExperimentConfig, GridSpec, Hyperparameters, Method};
pub use metrics::{check_metrics, read_metrics_csv, write_metrics_csv, MetricsRow, METRICS_HEADER};
pub use run::{
    checkpoint_steps, evaluate_greedy, metrics_file_name, run_experiment, run_seed, write_atomic,
    write_seed_outputs, AnyEnv, SeedOutputs, SeedRun, KEY_STATE_FRACTION,
};
pub use summary::{
    load_metrics_dir, parse_metrics_file_name, summarize, summarize_dir, trapezoid_auc, CheckpointStats,
    ConditionSummary, SeedMetrics, Summary,
};
