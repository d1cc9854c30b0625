//! Scenario files and the `analyze`, `simulate` and `sweep` drivers.

mod commands;
mod config;

pub use commands::{
    analyze, cmd_analyze, cmd_simulate, cmd_sweep, AnalysisReport, SimulationSummary, SweepRow, SERIES_HEADER,
    SUMMARY_HEADER,
};
pub use config::{is_sweepable, parse_config, ConfigBuilder, ConfigSource, KernelSpec, ScenarioConfig, PRESETS};
