//! End-to-end runs: ingest, prepare, split, encode, stage 1, cascade, network, metrics.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{DataSource, ExperimentConfig, LabelSpec};
use crate::cascade::{augment, relabel};
use crate::dataset::{
    categorize, derive_match_label, derive_threshold_label, equal_frequency_bin, gen_synthetic_h1b,
    impute_missing, load_csv, split, undersample, Column, ColumnKind, ColumnarTable, ImputePolicy,
    SplitPair, LABEL,
};
use crate::error::{Error, Result, StageContext};
use crate::metrics::{emit_report, median, F1Mode, MetricsReport, ReportFormat, Stage};
use crate::mlp::{self, MlpConfig, TrainHistory};
use crate::parallel::Executor;
use crate::pipeline::{fit_pipeline, FeatureMatrix, FittedPipeline};
use crate::stage1::{Stage1Model, Stage1Output};

/// Column that carries the network's labels when they differ from stage 1's.
pub const STAGE3_LABEL: &str = "stage3_label";

/// The outcome of one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub seed: u64,
    pub stage1: MetricsReport,
    pub stage3: MetricsReport,
    pub history: TrainHistory,
    pub layer_sizes: Vec<usize>,
    pub train_rows: usize,
    pub test_rows: usize,
}

/// A labelled table ready to split, with the class counts of both label sets.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedTable {
    pub table: ColumnarTable,
    pub classes: usize,
    pub stage3_classes: Option<usize>,
}

/// Read or generate the raw table.
pub fn load_data(config: &ExperimentConfig) -> Result<ColumnarTable> {
    let table = match &config.data {
        DataSource::Synthetic {
            rows,
            positive_fraction,
            seed,
        } => gen_synthetic_h1b(*rows, *positive_fraction, *seed),
        DataSource::Csv { path, .. } => {
            let schema = config.data.csv_schema()?.expect("csv source");
            load_csv(path, &schema)
        }
    };
    table.stage("ingest")
}

/// Attach `spec`'s labels as the table's label column; returns the class count.
fn apply_label(table: &ColumnarTable, spec: &LabelSpec) -> Result<(ColumnarTable, usize)> {
    match spec {
        LabelSpec::Match {
            column,
            value,
            matched_class,
        } => Ok((derive_match_label(table, column, value, *matched_class)?, 2)),
        LabelSpec::Threshold { column, threshold } => {
            Ok((derive_threshold_label(table, column, *threshold)?, 2))
        }
        LabelSpec::Bins { column, bins } => {
            let (labelled, bins) = equal_frequency_bin(table, column, *bins)?;
            Ok((labelled, bins.k))
        }
        LabelSpec::Column { column } => {
            let values = table.numeric(column)?;
            let labelled = table
                .with_column(Column::numeric(LABEL, values))?
                .with_label(LABEL)?;
            let classes = labelled
                .labels()?
                .into_iter()
                .max()
                .map_or(2, |m| (m + 1).max(2));
            Ok((labelled, classes))
        }
    }
}

/// Impute, filter, categorize, derive labels and (optionally) undersample.
pub fn prepare(config: &ExperimentConfig, raw: &ColumnarTable, seed: u64) -> Result<PreparedTable> {
    let mut table = impute_missing(raw, ImputePolicy::MeanMode).stage("impute")?;
    let pre = &config.preprocess;
    if let Some(filter) = &pre.filter {
        table = table
            .filter_equals(&filter.column, &filter.equals)
            .stage("preprocess")?;
    }
    for c in &pre.categorize {
        table = categorize(&table, &c.column, c.bins).stage("preprocess")?.0;
    }

    let mut stage3_classes = None;
    if let Some(spec) = &config.stage3_label {
        let (labelled, classes) = apply_label(&table, spec).stage("label")?;
        let ids = labelled.labels().stage("label")?;
        table = table
            .with_column(Column::numeric(STAGE3_LABEL, ids.iter().map(|&c| c as f64)))
            .stage("label")?;
        stage3_classes = Some(classes);
    }
    let (mut table, classes) = apply_label(&table, &config.label).stage("label")?;
    if pre.undersample {
        table = undersample(&table, seed).stage("undersample")?;
    }
    Ok(PreparedTable {
        table,
        classes,
        stage3_classes,
    })
}

fn f1_mode(classes: usize) -> F1Mode {
    if classes == 2 {
        F1Mode::BinaryPositive
    } else {
        F1Mode::Macro
    }
}

/// (column, mean, standard deviation) of each numeric-block column of `fit`.
fn numeric_stats(pipeline: &FittedPipeline, fit: &FeatureMatrix) -> Vec<(usize, f64, f64)> {
    let x = fit.features();
    let n = x.nrows() as f64;
    pipeline
        .layout()
        .iter()
        .filter(|b| b.kind == ColumnKind::Numeric)
        .map(|b| {
            let col = x.column(b.offset);
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
            (b.offset, mean, sd)
        })
        .collect()
}

fn standardize(m: FeatureMatrix, stats: &[(usize, f64, f64)]) -> Result<FeatureMatrix> {
    let (mut features, labels, classes) = m.into_parts();
    for &(j, mean, sd) in stats {
        features.column_mut(j).mapv_inplace(|v| (v - mean) / sd);
    }
    FeatureMatrix::new(features, labels, classes)
}

/// The numeric feature columns, resolving `all_numeric` against the table.
pub fn numeric_features(config: &ExperimentConfig, table: &ColumnarTable) -> Vec<String> {
    if !config.features.all_numeric {
        return config.features.numeric.clone();
    }
    let mut reserved = vec![LABEL, STAGE3_LABEL, config.label.source_column()];
    reserved.extend(config.stage3_label.as_ref().map(LabelSpec::source_column));
    table
        .columns()
        .iter()
        .filter(|c| c.kind() == ColumnKind::Numeric && !reserved.contains(&c.name()))
        .map(|c| c.name().to_owned())
        .collect()
}

fn stage3_labels(table: &ColumnarTable) -> Result<Vec<usize>> {
    Ok(table
        .numeric(STAGE3_LABEL)?
        .into_iter()
        .map(|v| v as usize)
        .collect())
}

/// Everything stage 1 produces for one seed.
struct Stage1Phase {
    parts: SplitPair,
    train_x: FeatureMatrix,
    test_x: FeatureMatrix,
    train_out: Stage1Output,
    test_out: Stage1Output,
    report: MetricsReport,
}

fn stage1_phase(
    config: &ExperimentConfig,
    prepared: &PreparedTable,
    seed: u64,
    executor: &Executor,
    echo: &serde_json::Value,
) -> Result<Stage1Phase> {
    let parts = split(&prepared.table, config.split.ratio, seed).stage("split")?;
    let features = &config.features;

    let fit_table = if config.stage1_on_full_data {
        &prepared.table
    } else {
        &parts.train
    };
    let numeric = numeric_features(config, &prepared.table);
    let pipeline = fit_pipeline(fit_table, &features.categorical, &numeric)
        .stage("pipeline")?
        .with_unseen_policy(features.unseen);
    let mut train_x = pipeline.transform(&parts.train).stage("pipeline")?;
    let mut test_x = pipeline.transform(&parts.test).stage("pipeline")?;
    let mut full_x = if config.stage1_on_full_data {
        Some(pipeline.transform(&prepared.table).stage("pipeline")?)
    } else {
        None
    };
    if features.standardize {
        let stats = numeric_stats(&pipeline, full_x.as_ref().unwrap_or(&train_x));
        train_x = standardize(train_x, &stats).stage("pipeline")?;
        test_x = standardize(test_x, &stats).stage("pipeline")?;
        full_x = full_x
            .map(|f| standardize(f, &stats))
            .transpose()
            .stage("pipeline")?;
    }

    let fit_x = full_x.as_ref().unwrap_or(&train_x);
    let model = Stage1Model::train(&config.stage1, fit_x, seed, executor).stage("stage1")?;
    let train_out = model.predict_proba(&train_x).stage("stage1")?;
    let test_out = model.predict_proba(&test_x).stage("stage1")?;
    let classes = test_x.class_count();
    let report = MetricsReport::evaluate(
        &config.task,
        Stage::Stage1,
        seed,
        executor.partitions(),
        f1_mode(classes),
        &test_out.predictions,
        test_x.labels(),
        classes,
        echo.clone(),
    )
    .stage("metrics")?;
    Ok(Stage1Phase {
        parts,
        train_x,
        test_x,
        train_out,
        test_out,
        report,
    })
}

fn config_echo(config: &ExperimentConfig) -> Result<serde_json::Value> {
    serde_json::to_value(config).map_err(|e| Error::Config(e.to_string()))
}

/// Split, encode and evaluate stage 1 only.
pub fn run_stage1(
    config: &ExperimentConfig,
    prepared: &PreparedTable,
    seed: u64,
    executor: &Executor,
) -> Result<MetricsReport> {
    let echo = config_echo(config)?;
    Ok(stage1_phase(config, prepared, seed, executor, &echo)?.report)
}

/// One seed over an already prepared table.
pub fn run_prepared(
    config: &ExperimentConfig,
    prepared: &PreparedTable,
    seed: u64,
    executor: &Executor,
) -> Result<RunOutcome> {
    let echo = config_echo(config)?;
    let phase = stage1_phase(config, prepared, seed, executor, &echo)?;
    let classes = phase.test_x.class_count();

    let mut train_k = augment(&phase.train_x, &phase.train_out, config.cascade).stage("cascade")?;
    let mut test_k = augment(&phase.test_x, &phase.test_out, config.cascade).stage("cascade")?;
    let mut classes3 = classes;
    if let Some(k) = prepared.stage3_classes {
        let train_labels = stage3_labels(&phase.parts.train).stage("cascade")?;
        let test_labels = stage3_labels(&phase.parts.test).stage("cascade")?;
        train_k = relabel(&train_k, &train_labels, k).stage("cascade")?;
        test_k = relabel(&test_k, &test_labels, k).stage("cascade")?;
        classes3 = k;
    }

    let layer_sizes = config
        .mlp
        .layer_sizes(train_k.dim(), classes3)
        .stage("mlp")?;
    let mlp_config = MlpConfig {
        layer_sizes: layer_sizes.clone(),
        epochs: config.mlp.epochs,
        batch_size: config.mlp.batch_size,
        learning_rate: config.mlp.learning_rate,
        seed,
    };
    let init = mlp::init_network(&mlp_config).stage("mlp")?;
    let (network, history) = mlp::train(init, &train_k, &mlp_config, executor).stage("mlp")?;
    let predictions = network.predict(&test_k).stage("mlp")?;
    let stage3 = MetricsReport::evaluate(
        &config.task,
        Stage::Stage3,
        seed,
        executor.partitions(),
        f1_mode(classes3),
        &predictions,
        test_k.labels(),
        classes3,
        echo,
    )
    .stage("metrics")?;

    Ok(RunOutcome {
        seed,
        stage1: phase.report,
        stage3,
        history,
        layer_sizes,
        train_rows: phase.parts.train.n_rows(),
        test_rows: phase.parts.test.n_rows(),
    })
}

/// One full run for `seed`: the stage-1 and stage-3 reports on the test split.
pub fn run_experiment(
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(MetricsReport, MetricsReport)> {
    let executor = Executor::new(config.partitions).stage("config")?;
    let raw = load_data(config)?;
    let prepared = prepare(config, &raw, seed)?;
    let out = run_prepared(config, &prepared, seed, &executor)?;
    Ok((out.stage1, out.stage3))
}

/// Every configured seed, reading the data once.
pub fn run_all(config: &ExperimentConfig) -> Result<Vec<RunOutcome>> {
    config.validate().stage("config")?;
    let executor = Executor::new(config.partitions).stage("config")?;
    let raw = load_data(config)?;
    let mut outcomes = Vec::with_capacity(config.seeds.len());
    // without undersampling the prepared table does not depend on the seed
    let shared = if config.preprocess.undersample {
        None
    } else {
        Some(prepare(config, &raw, 0)?)
    };
    for &seed in &config.seeds {
        let owned;
        let prepared = match &shared {
            Some(p) => p,
            None => {
                owned = prepare(config, &raw, seed)?;
                &owned
            }
        };
        outcomes.push(run_prepared(config, prepared, seed, &executor)?);
    }
    Ok(outcomes)
}

/// Median metrics across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub task: String,
    pub seeds: usize,
    pub stage1_accuracy: f64,
    pub stage1_f1: f64,
    pub stage3_accuracy: f64,
    pub stage3_f1: f64,
    /// Seeds where stage 3's F1 is at least stage 1's.
    pub stage3_not_worse: usize,
}

impl Summary {
    pub fn of(outcomes: &[RunOutcome]) -> Option<Summary> {
        let first = outcomes.first()?;
        let pick = |f: fn(&RunOutcome) -> f64| {
            median(&outcomes.iter().map(f).collect::<Vec<_>>()).expect("non-empty")
        };
        Some(Summary {
            task: first.stage1.task.clone(),
            seeds: outcomes.len(),
            stage1_accuracy: pick(|o| o.stage1.accuracy),
            stage1_f1: pick(|o| o.stage1.f1),
            stage3_accuracy: pick(|o| o.stage3.accuracy),
            stage3_f1: pick(|o| o.stage3.f1),
            stage3_not_worse: outcomes
                .iter()
                .filter(|o| o.stage3.f1 >= o.stage1.f1)
                .count(),
        })
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} (median over {} seeds)", self.task, self.seeds)?;
        writeln!(f, "           accuracy  f1")?;
        writeln!(
            f,
            "  stage 1  {:.4}    {:.4}",
            self.stage1_accuracy, self.stage1_f1
        )?;
        writeln!(
            f,
            "  stage 3  {:.4}    {:.4}",
            self.stage3_accuracy, self.stage3_f1
        )?;
        write!(
            f,
            "  stage 3 f1 >= stage 1 f1 in {}/{} seeds",
            self.stage3_not_worse, self.seeds
        )
    }
}

/// Write `reports.json`, `reports.csv` and `history.json` under `dir`.
pub fn write_outputs(outcomes: &[RunOutcome], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let reports: Vec<MetricsReport> = outcomes
        .iter()
        .flat_map(|o| [o.stage1.clone(), o.stage3.clone()])
        .collect();
    emit_report(&reports, &dir.join("reports.json"), ReportFormat::Document)?;
    emit_report(&reports, &dir.join("reports.csv"), ReportFormat::Csv)?;
    let histories: Vec<(u64, &TrainHistory)> =
        outcomes.iter().map(|o| (o.seed, &o.history)).collect();
    let text =
        serde_json::to_string_pretty(&histories).map_err(|e| Error::Document(e.to_string()))?;
    let path = dir.join("history.json");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}
