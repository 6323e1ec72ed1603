//! Configuration files, preset runs and result tables.

mod config;
mod run;

pub use config::{parse_config, ConfigFile, Quantity};
pub use run::{
    clock_table, materialize, reference_clock, run_preset, sql_table, survival_point,
    survival_table, tomography_table, AllanRow, OutputFormat, Report, RunManifest, RunOptions,
    SqlRow, SurvivalRow, TomographyRow, SCHEMA_VERSION, SURVIVAL_DARK_TIMES, TOOL_VERSION,
};
