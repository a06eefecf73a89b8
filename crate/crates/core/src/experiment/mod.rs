//! Sweep configuration, snapshot loop, oracle sampling and CSV/JSON output.

pub mod config;
pub mod oracle_check;
pub mod runner;

pub use config::{ExperimentConfig, GridPoint, SweepMode};
pub use oracle_check::{oracle_check, OracleCase, OracleSummary};
pub use runner::{
    evaluate_snapshot, run_experiment, snapshot, write_outputs, ExperimentResult, Manifest, SeedRecord,
};
