//! Experiment laboratory for random walks among heavy-tailed random
//! conductances: configuration, deterministic parallel drivers, the
//! experiment harnesses, and CSV/JSON/binary output.

pub mod config;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod parallel;
pub mod report;
pub mod runner;

pub use config::{LawConfig, Overrides, RunConfig};
pub use error::{LabError, Result};
pub use parallel::Driver;
pub use report::{emit_report, ExperimentReport, RunOutput};
