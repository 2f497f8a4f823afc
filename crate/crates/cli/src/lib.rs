//! Configuration-driven experiment runner for fracsym: parses a TOML
//! experiment, runs solve and verify tasks, and writes JSON, CSV and text
//! reports plus field dumps.

pub mod config;
pub mod report;
pub mod run;
pub mod sweep;

pub use config::{parse_config, parse_config_str, ConfigError, ExperimentConfig, Task, Tolerances, TASK_KINDS};
pub use report::emit_report;
pub use run::{default_cache_dir, run, RunError, RunMetadata, RunReport, TaskResult, SCHEMA_VERSION};
pub use sweep::{kernel_sweep, SweepOutcome};
