//! Confusion matrix, accuracy, F1 and per-class recall, plus the report
//! records written after each run.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::document::Documented;
use crate::error::{Error, Result};

/// `counts[t][p]` = number of rows with true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn class_count(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.class_count()).map(|c| self.counts[c][c]).sum()
    }

    fn actual(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    fn predicted(&self, c: usize) -> u64 {
        self.counts.iter().map(|row| row[c]).sum()
    }

    /// F1 of class `c` against the rest; 0 when the class is never predicted
    /// and never present.
    pub fn class_f1(&self, c: usize) -> f64 {
        let tp = self.counts[c][c] as f64;
        let denom = (self.actual(c) + self.predicted(c)) as f64;
        if denom == 0.0 {
            0.0
        } else {
            2.0 * tp / denom
        }
    }
}

pub fn confusion(
    predictions: &[usize],
    labels: &[usize],
    classes: usize,
) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut cm = ConfusionMatrix::zeros(classes);
    for (&p, &t) in predictions.iter().zip(labels) {
        if p >= classes || t >= classes {
            return Err(Error::Label(format!(
                "class pair (true {t}, predicted {p}) out of range for {classes} classes"
            )));
        }
        cm.counts[t][p] += 1;
    }
    Ok(cm)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Metric(
            "accuracy of an empty confusion matrix".into(),
        ));
    }
    Ok(cm.trace() as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum F1Mode {
    /// F1 of class 1 in a two-class problem.
    BinaryPositive,
    /// Unweighted mean of the per-class F1 scores.
    Macro,
}

impl F1Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            F1Mode::BinaryPositive => "binary_positive",
            F1Mode::Macro => "macro",
        }
    }
}

pub fn f1(cm: &ConfusionMatrix, mode: F1Mode) -> Result<f64> {
    let k = cm.class_count();
    match mode {
        F1Mode::BinaryPositive if k != 2 => {
            Err(Error::Metric(format!("binary F1 needs 2 classes, got {k}")))
        }
        F1Mode::BinaryPositive => Ok(cm.class_f1(1)),
        F1Mode::Macro if k == 0 => Err(Error::Metric("macro F1 over zero classes".into())),
        F1Mode::Macro => Ok((0..k).map(|c| cm.class_f1(c)).sum::<f64>() / k as f64),
    }
}

/// `counts[c][c] / Σ_p counts[c][p]`, 0 for a class with no rows.
pub fn per_class_recall(cm: &ConfusionMatrix) -> Vec<f64> {
    (0..cm.class_count())
        .map(|c| match cm.actual(c) {
            0 => 0.0,
            n => cm.counts[c][c] as f64 / n as f64,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Stage1,
    Stage3,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Stage1 => "stage1",
            Stage::Stage3 => "stage3",
        }
    }
}

/// Evaluation of one stage of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub task: String,
    pub stage: Stage,
    pub seed: u64,
    pub partitions: usize,
    pub f1_mode: F1Mode,
    pub accuracy: f64,
    pub f1: f64,
    pub per_class_recall: Vec<f64>,
    pub confusion: ConfusionMatrix,
    /// The configuration that produced the numbers.
    pub config: serde_json::Value,
}

impl MetricsReport {
    #[allow(clippy::too_many_arguments)]
    pub fn evaluate(
        task: &str,
        stage: Stage,
        seed: u64,
        partitions: usize,
        f1_mode: F1Mode,
        predictions: &[usize],
        labels: &[usize],
        classes: usize,
        config: serde_json::Value,
    ) -> Result<Self> {
        let cm = confusion(predictions, labels, classes)?;
        Ok(MetricsReport {
            task: task.to_owned(),
            stage,
            seed,
            partitions,
            f1_mode,
            accuracy: accuracy(&cm)?,
            f1: f1(&cm, f1_mode)?,
            per_class_recall: per_class_recall(&cm),
            confusion: cm,
            config,
        })
    }
}

/// A list of reports written as one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSet {
    pub reports: Vec<MetricsReport>,
}

impl Documented for ReportSet {
    const KIND: &'static str = "metrics-reports";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Versioned JSON document holding every report in full.
    Document,
    /// One flat row per report.
    Csv,
}

pub const CSV_HEADER: [&str; 8] = [
    "task",
    "stage",
    "seed",
    "partitions",
    "f1_mode",
    "accuracy",
    "f1",
    "per_class_recall",
];

/// Write `reports` to `path`. Rows are sorted by (task, seed, stage) so each
/// stage-3 row sits right after its stage-1 sibling and output is byte-stable.
pub fn emit_report(reports: &[MetricsReport], path: &Path, format: ReportFormat) -> Result<()> {
    let mut sorted = reports.to_vec();
    sorted.sort_by(|a, b| (&a.task, a.seed, a.stage).cmp(&(&b.task, b.seed, b.stage)));
    match format {
        ReportFormat::Document => ReportSet { reports: sorted }.save(path),
        ReportFormat::Csv => {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut out = csv::Writer::from_writer(file);
            let csv_err = |e: csv::Error| Error::Document(format!("{}: {e}", path.display()));
            out.write_record(CSV_HEADER).map_err(csv_err)?;
            for r in &sorted {
                let recall: Vec<String> =
                    r.per_class_recall.iter().map(|v| v.to_string()).collect();
                out.write_record([
                    r.task.clone(),
                    r.stage.as_str().to_owned(),
                    r.seed.to_string(),
                    r.partitions.to_string(),
                    r.f1_mode.as_str().to_owned(),
                    r.accuracy.to_string(),
                    r.f1.to_string(),
                    recall.join(";"),
                ])
                .map_err(csv_err)?;
            }
            out.flush().map_err(|e| Error::io(path, e))
        }
    }
}

/// Median of a non-empty slice; the mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cm(counts: Vec<Vec<u64>>) -> ConfusionMatrix {
        ConfusionMatrix { counts }
    }

    #[test]
    fn confusion_cases() {
        assert_eq!(
            confusion(&[1, 0, 1], &[1, 1, 1], 2).unwrap(),
            cm(vec![vec![0, 0], vec![1, 2]])
        );
        assert_eq!(
            confusion(&[0, 2, 1, 2], &[0, 2, 1, 2], 3).unwrap(),
            cm(vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 2]])
        );
        assert!(matches!(confusion(&[3], &[0], 2), Err(Error::Label(_))));
    }

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&cm(vec![vec![3, 0], vec![0, 4]])).unwrap(), 1.0);
        assert_relative_eq!(
            accuracy(&cm(vec![vec![0, 0], vec![1, 2]])).unwrap(),
            2.0 / 3.0
        );
        assert!(matches!(
            accuracy(&ConfusionMatrix::zeros(2)),
            Err(Error::Metric(_))
        ));
    }

    #[test]
    fn binary_f1_against_formula() {
        // TP=8, FP=2, FN=4, TN=6
        let m = cm(vec![vec![6, 2], vec![4, 8]]);
        let (p, r) = (8.0 / 10.0, 8.0 / 12.0);
        assert_relative_eq!(
            f1(&m, F1Mode::BinaryPositive).unwrap(),
            2.0 * p * r / (p + r),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            f1(&m, F1Mode::BinaryPositive).unwrap(),
            0.727_272_727_272_727_3,
            epsilon = 1e-15
        );
        assert_eq!(
            f1(&cm(vec![vec![5, 0], vec![0, 5]]), F1Mode::BinaryPositive).unwrap(),
            1.0
        );
        assert_eq!(
            f1(&cm(vec![vec![5, 5], vec![5, 5]]), F1Mode::BinaryPositive).unwrap(),
            0.5
        );
    }

    #[test]
    fn f1_mode_and_conventions() {
        let three = ConfusionMatrix::zeros(3);
        assert!(matches!(
            f1(&three, F1Mode::BinaryPositive),
            Err(Error::Metric(_))
        ));
        // class 2 never occurs nor is predicted: contributes 0 to the macro mean
        let m = cm(vec![vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 0]]);
        assert_relative_eq!(f1(&m, F1Mode::Macro).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn recall_cases() {
        assert_eq!(per_class_recall(&cm(vec![vec![0, 0], vec![1, 2]]))[0], 0.0);
        assert_relative_eq!(
            per_class_recall(&cm(vec![vec![0, 0], vec![1, 2]]))[1],
            2.0 / 3.0
        );
        assert_eq!(
            per_class_recall(&cm(vec![vec![4, 0], vec![0, 1]])),
            vec![1.0, 1.0]
        );
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    fn report(stage: Stage, seed: u64) -> MetricsReport {
        MetricsReport::evaluate(
            "t",
            stage,
            seed,
            1,
            F1Mode::BinaryPositive,
            &[0, 1, 1],
            &[0, 1, 0],
            2,
            serde_json::json!({"b": 1, "a": [1, 2]}),
        )
        .unwrap()
    }

    #[test]
    fn csv_has_header_and_paired_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        emit_report(
            &[report(Stage::Stage3, 0), report(Stage::Stage1, 0)],
            &path,
            ReportFormat::Csv,
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("task,stage,seed"));
        assert!(lines[1].starts_with("t,stage1,0,"));
        assert!(lines[2].starts_with("t,stage3,0,"));
    }

    #[test]
    fn emission_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let reports = [report(Stage::Stage1, 2), report(Stage::Stage3, 2)];
        for format in [ReportFormat::Csv, ReportFormat::Document] {
            let (a, b) = (dir.path().join("a"), dir.path().join("b"));
            emit_report(&reports, &a, format).unwrap();
            emit_report(&reports, &b, format).unwrap();
            assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        }
        let doc = std::fs::read_to_string(dir.path().join("a")).unwrap();
        let back = ReportSet::from_document(&doc).unwrap();
        assert_eq!(back.reports, reports.to_vec());
    }

    #[test]
    fn directory_as_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        for format in [ReportFormat::Csv, ReportFormat::Document] {
            let err = emit_report(&[report(Stage::Stage1, 0)], dir.path(), format).unwrap_err();
            assert!(matches!(err, Error::Io { .. }), "{err:?}");
        }
    }

    fn matrix(k: usize) -> impl Strategy<Value = ConfusionMatrix> {
        prop::collection::vec(prop::collection::vec(0u64..50, k), k)
            .prop_map(|counts| ConfusionMatrix { counts })
    }

    proptest! {
        #[test]
        fn accuracy_is_prevalence_weighted_recall(m in (2usize..6).prop_flat_map(matrix)) {
            prop_assume!(m.total() > 0);
            let recall = per_class_recall(&m);
            let n = m.total() as f64;
            let weighted: f64 = (0..m.class_count()).map(|c| recall[c] * m.actual(c) as f64 / n).sum();
            prop_assert!((accuracy(&m).unwrap() - weighted).abs() < 1e-12);
        }

        #[test]
        fn binary_f1_symmetric_in_fp_fn(tp in 0u64..50, fp in 0u64..50, fn_ in 0u64..50, tn in 0u64..50) {
            let a = f1(&cm(vec![vec![tn, fp], vec![fn_, tp]]), F1Mode::BinaryPositive).unwrap();
            let b = f1(&cm(vec![vec![tn, fn_], vec![fp, tp]]), F1Mode::BinaryPositive).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn metrics_ignore_row_order(pairs in prop::collection::vec((0usize..3, 0usize..3), 1..60), seed: u64) {
            use rand::seq::SliceRandom;
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut crate::rng::seeded(seed, 0));
            let split = |v: &[(usize, usize)]| -> (Vec<usize>, Vec<usize>) { v.iter().copied().unzip() };
            let (p1, l1) = split(&pairs);
            let (p2, l2) = split(&shuffled);
            let a = confusion(&p1, &l1, 3).unwrap();
            let b = confusion(&p2, &l2, 3).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(f1(&a, F1Mode::Macro).unwrap(), f1(&b, F1Mode::Macro).unwrap());
        }

        #[test]
        fn metrics_stay_in_unit_interval(m in (2usize..5).prop_flat_map(matrix)) {
            prop_assume!(m.total() > 0);
            let acc = accuracy(&m).unwrap();
            let macro_f1 = f1(&m, F1Mode::Macro).unwrap();
            prop_assert!((0.0..=1.0).contains(&acc) && (0.0..=1.0).contains(&macro_f1));
            prop_assert!(per_class_recall(&m).iter().all(|r| (0.0..=1.0).contains(r)));
        }
    }
}
