//! Experiment runner for MAP-GA inpainting on analytic priors: config
//! parsing, prior and dataset setup, the (solver, mask, σ_y, seed) grid,
//! metrics CSV and image artifacts.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod image;
pub mod metrics;
pub mod runner;

pub use config::{ExperimentConfig, PriorSpec, Shape, SolverName};
pub use error::{CliError, Result};
pub use metrics::{MetricsRow, METRICS_COLUMNS};
pub use runner::{run_experiment, Experiment};
