//! The shipped task configurations.

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const PRESET_NAMES: [&str; 4] = ["task1", "task2", "task3", "task4"];

/// TOML text of a preset, comments included.
pub fn preset_text(name: &str) -> Result<&'static str> {
    match name {
        "task1" => Ok(include_str!("../../presets/task1.toml")),
        "task2" => Ok(include_str!("../../presets/task2.toml")),
        "task3" => Ok(include_str!("../../presets/task3.toml")),
        "task4" => Ok(include_str!("../../presets/task4.toml")),
        other => Err(Error::Config(format!(
            "unknown preset `{other}` (expected one of {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}

pub fn load_task_preset(name: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::from_toml_str(preset_text(name)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::{DataSource, LabelSpec};
    use crate::stage1::Stage1Spec;

    #[test]
    fn every_preset_parses() {
        for name in PRESET_NAMES {
            let c = load_task_preset(name).unwrap();
            assert_eq!(c.task, name);
            assert_eq!(c.seeds.len(), 5);
        }
    }

    #[test]
    fn task1_shape() {
        let c = load_task_preset("task1").unwrap();
        assert!(c.preprocess.undersample);
        assert!(matches!(c.stage1, Stage1Spec::Logistic { .. }));
        assert_eq!(c.mlp.hidden, vec![512, 128]);
        assert_eq!((c.mlp.epochs, c.mlp.batch_size), (100, 1024));
        assert!(c.cascade.include_probabilities && c.cascade.include_prediction_label);
        assert!(matches!(c.data, DataSource::Synthetic { rows: 20_000, .. }));
    }

    #[test]
    fn task2_and_task3_shape() {
        let t2 = load_task_preset("task2").unwrap();
        assert!(matches!(t2.stage1, Stage1Spec::NaiveBayes { .. }));
        assert!(
            matches!(t2.label, LabelSpec::Threshold { threshold, .. } if threshold == 90_000.0)
        );
        assert_eq!(t2.mlp.hidden, vec![256, 32]);
        let t3 = load_task_preset("task3").unwrap();
        assert!(matches!(t3.stage1, Stage1Spec::NaiveBayes { .. }));
        assert!(matches!(
            t3.stage3_label,
            Some(LabelSpec::Bins { bins: 4, .. })
        ));
        assert_eq!(t3.mlp.output, Some(4));
    }

    #[test]
    fn task4_layers() {
        let c = load_task_preset("task4").unwrap();
        assert_eq!(c.mlp.layer_sizes(281, 2).unwrap(), vec![281, 64, 64, 2]);
        assert_eq!((c.mlp.epochs, c.mlp.batch_size), (100, 50));
        assert!(matches!(c.stage1, Stage1Spec::Logistic { .. }));
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(load_task_preset("task9"), Err(Error::Config(_))));
    }
}
