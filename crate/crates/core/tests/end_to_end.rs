mod common;

use std::fs;

use cascade_learn::document::Documented;
use cascade_learn::experiment::{
    load_task_preset, run_all, run_experiment, DataSource, ExperimentConfig,
};
use cascade_learn::metrics::{ReportSet, Stage};
use cascade_learn::Error;

fn small_task1() -> ExperimentConfig {
    let mut config = load_task_preset("task1").unwrap();
    config.data = DataSource::Synthetic {
        rows: 2_000,
        positive_fraction: 0.935,
        seed: 2016,
    };
    config.mlp.hidden = vec![16, 8];
    config.mlp.epochs = 5;
    config.seeds = vec![0, 1];
    config
}

#[test]
fn both_reports_share_seed_and_config_echo() {
    let config = small_task1();
    let (stage1, stage3) = run_experiment(&config, 3).unwrap();
    assert_eq!(stage1.stage, Stage::Stage1);
    assert_eq!(stage3.stage, Stage::Stage3);
    assert_eq!(stage1.seed, 3);
    assert_eq!(stage3.seed, 3);
    assert_eq!(stage1.config, stage3.config);
    assert_eq!(stage1.confusion.total(), stage3.confusion.total());
}

#[test]
fn missing_csv_is_a_stage_tagged_ingest_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::task4_on(&dir.path().join("absent.data"));
    let err = run_all(&config).unwrap_err();
    match &err {
        Error::Stage { stage, source } => {
            assert_eq!(*stage, "ingest");
            assert!(matches!(**source, Error::Ingest(_)), "{source}");
        }
        other => panic!("expected a stage-tagged error, got {other}"),
    }
    assert!(err.to_string().starts_with("[ingest]"));
}

#[test]
fn task4_runs_on_an_arrhythmia_shaped_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::write_surrogate(dir.path(), 7);
    let mut config = common::task4_on(&path);
    config.seeds = vec![0];
    let outcomes = run_all(&config).unwrap();
    let o = &outcomes[0];
    assert_eq!(o.layer_sizes, vec![281, 64, 64, 2]);
    assert_eq!(o.train_rows + o.test_rows, 452);
    assert_eq!(o.train_rows, 316);
    assert_eq!(o.history.epoch_loss.len(), 100);
    assert!(o.stage3.accuracy > 0.5);
}

#[test]
fn relative_csv_paths_resolve_against_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    common::write_surrogate(dir.path(), 2);
    let text = cascade_learn::experiment::preset_text("task4")
        .unwrap()
        .replace("seeds = [0, 1, 2, 3, 4]", "seeds = [0]")
        .replace(
            "epochs = 100\nbatch_size = 50",
            "epochs = 2\nbatch_size = 50",
        );
    let config_path = dir.path().join("task4.toml");
    fs::write(&config_path, text).unwrap();
    let config = ExperimentConfig::from_file(&config_path).unwrap();
    let outcomes = run_all(&config).unwrap();
    assert_eq!(outcomes[0].history.epoch_loss.len(), 2);
}

#[test]
fn written_reports_read_back_as_a_document() {
    let dir = tempfile::tempdir().unwrap();
    let outcomes = run_all(&small_task1()).unwrap();
    cascade_learn::experiment::write_outputs(&outcomes, dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("reports.json")).unwrap();
    let set = ReportSet::from_document(&text).unwrap();
    assert_eq!(set.reports.len(), 4);
    let csv = fs::read_to_string(dir.path().join("reports.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(dir.path().join("history.json").is_file());
}

#[test]
fn undersampled_runs_balance_both_splits_together() {
    let outcomes = run_all(&small_task1()).unwrap();
    for o in &outcomes {
        let rows = o.train_rows + o.test_rows;
        assert_eq!(rows % 2, 0, "an undersampled table has equal class counts");
    }
}
