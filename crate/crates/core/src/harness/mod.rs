//! Monte Carlo experiments, empirical CDFs and report files.

mod config;
pub mod ecdf;
mod experiments;
mod report;
pub mod runner;

pub use config::{ExperimentConfig, ExperimentKind, Thresholds};
pub use ecdf::{empirical_cdf, EmpiricalCdf, Quantiles};
pub use experiments::{istar_limit_gates, run, run_and_write, LpRecord, Runner};
pub use report::{Analytic, Counts, ExperimentReport, Gate, Sample, Series, TrialFailure};
pub use runner::{default_workers, map_trials};
