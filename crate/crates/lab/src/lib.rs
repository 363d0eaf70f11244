//! Experiment harness for REINFORCE variance studies on random LQR problems.
//!
//! [`config`] resolves `key=value` settings into a [`SweepConfig`],
//! [`experiments`] produces rows, [`table`] reads and writes the CSV files,
//! [`plot`] renders them and [`runner`] ties a complete run together.

pub mod config;
mod error;
pub mod experiments;
pub mod plot;
pub mod runner;
pub mod table;

pub use config::{Experiment, RunOptions, Settings, StepSize, SweepConfig};
pub use error::{exit, LabError, LabResult};
