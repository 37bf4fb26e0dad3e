//! Seeded Monte-Carlo experiments for the covariance-free SBL estimators:
//! NMSE sweeps, timing checkpoints, MVDR SCNR and dynamic tracking, with CSV
//! results and SVG plots.

pub mod algorithms;
pub mod config;
pub mod dynamic;
pub mod error;
pub mod mvdr;
pub mod plot;
pub mod results;
pub mod run;
pub mod scenes;
pub mod sweep;

pub use config::{ExperimentSpec, Overrides};
pub use error::{BenchError, Result};
pub use run::{execute, replot, run_experiment, RunOutput};
