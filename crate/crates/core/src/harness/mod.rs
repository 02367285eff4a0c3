//! Experiment pipeline: `(lambda, tau)` grid search on a validation trajectory, SPDNN vs.
//! unpenalized (NPDNN) comparison, evaluation on a long test trajectory, replication across
//! seeds and report emission.

pub mod config;
pub mod evaluate;
pub mod grid;
pub mod replicate;
pub mod report;

pub use config::ExperimentConfig;
pub use evaluate::{evaluate_excess_risk, evaluate_l2, evaluate_test_mse, BayesRule, LagView, Predictor, TrueMean};
pub use grid::{grid_search, GridPoint, GridRow, GridSearchOutcome, GridSpec};
pub use replicate::{replicate, ErrorMetric, ExperimentResult, Method, ReplicationConfig};
pub use report::{read_results, summarize, write_report, write_results, SummaryRow};
