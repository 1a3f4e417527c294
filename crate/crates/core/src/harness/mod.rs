//! Experiment orchestration: configs, seeded replica fan-out, summary reports and the
//! pilot-calibrated thresholds the acceptance runs assert against.

pub mod calibration;
pub mod config;
pub mod experiments;
pub mod report;
pub mod stats;

pub use calibration::Calibration;
pub use config::ExperimentConfig;
pub use experiments::{experiment, experiments, pilot, run_replicas, Experiment};
pub use report::{Assertion, Provenance, SummaryReport, SCHEMA_VERSION};
pub use stats::{wilson, Proportion, Stat, Z95, Z99};
