//! Configuration-driven experiment runner and table reproduction.

mod config;
mod experiment;
mod tables;

pub use config::{CertificateOverride, ExperimentConfig, OutputConfig, Plant, SystemConfig};
pub use experiment::{run_experiment, run_trace_path, ExperimentSummary, FeasibilityReport, RunOptions, RunSummary};
pub use tables::{reproduce_table, reproduce_tables, TableCell, TableDocument, TABLE1_HORIZON, TABLE2_HORIZON};
