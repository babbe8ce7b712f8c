//! Scenario registry, experiment runner and result tables for the
//! harmonic-network benchmarks.

pub mod checks;
pub mod config;
pub mod error;
pub mod robot;
pub mod run;
pub mod scenario;
pub mod table;

pub use config::{RunConfig, PLAN_SEED};
pub use error::{BenchError, Result};
pub use robot::{robot_path, RobotPath, Termination};
pub use run::{run, train_run, RunResult, Trained};
pub use scenario::{Oracle, Preset, Scenario, ScenarioId};
pub use table::{collect_runs, RunRecord, Stat, Table};
