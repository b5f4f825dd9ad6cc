//! Config-driven experiments: TOML configs, the shipped task presets, the
//! runner that ties every module together, and report output.

mod config;
mod presets;
mod runner;

pub use config::{
    Categorize, ColumnSpec, DataSource, ExperimentConfig, FeatureSpec, Filter, LabelSpec,
    MlpSection, Preprocess, SplitSpec, SCHEMA_VERSION,
};
pub use presets::{load_task_preset, preset_text, PRESET_NAMES};
pub use runner::{
    load_data, numeric_features, prepare, run_all, run_experiment, run_prepared, run_stage1,
    write_outputs, PreparedTable, RunOutcome, Summary, STAGE3_LABEL,
};
