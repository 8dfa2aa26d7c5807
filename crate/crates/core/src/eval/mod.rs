//! Splitting, ranking metrics and the simulated experiment suites.

mod experiment;
mod metrics;
mod report;
mod split;

pub use experiment::{
    ablation_offline_init, prepare, run_experiment, session_specs, sweep, Bench, Policy, SessionSpec, SweepParam,
};
pub use metrics::{mean_metrics, metrics_for_rank, metrics_for_ranking, Metrics, NDCG_CUTOFF, TOP_N};
pub use report::{MetricsReport, MetricsRow};
pub use split::{extract_cold_tuples, hold_out_users, split_dataset, ColdTuples, Split, SplitSpec};
