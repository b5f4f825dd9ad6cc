//! Stage-1 classifiers: the models whose class probabilities become the
//! "knowledge" appended to the features.

mod logistic;
mod naive_bayes;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::document::Documented;
use crate::error::{Error, Result};
use crate::math::argmax;
use crate::pipeline::FeatureMatrix;

pub use logistic::{train_logistic, LogisticConfig, LogisticGradient, LogisticModel};
pub use naive_bayes::{train_naive_bayes, NaiveBayesModel};

/// Per-class probabilities for each row plus the argmax prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Output {
    pub probabilities: Array2<f64>,
    pub predictions: Vec<usize>,
}

impl Stage1Output {
    pub fn from_probabilities(probabilities: Array2<f64>) -> Self {
        let predictions = probabilities.axis_iter(Axis(0)).map(argmax).collect();
        Stage1Output {
            probabilities,
            predictions,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.probabilities.nrows()
    }

    pub fn class_count(&self) -> usize {
        self.probabilities.ncols()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Stage1Output {
            probabilities: self.probabilities.select(Axis(0), rows),
            predictions: rows.iter().map(|&r| self.predictions[r]).collect(),
        }
    }
}

/// Which stage-1 classifier to train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Stage1Spec {
    Logistic {
        #[serde(default = "LogisticConfig::default_learning_rate")]
        learning_rate: f64,
        #[serde(default = "LogisticConfig::default_epochs")]
        epochs: usize,
        #[serde(default = "LogisticConfig::default_batch_size")]
        batch_size: usize,
        #[serde(default)]
        standardize: bool,
    },
    NaiveBayes {
        #[serde(default = "NaiveBayesModel::default_alpha")]
        alpha: f64,
    },
}

impl Stage1Spec {
    pub fn name(&self) -> &'static str {
        match self {
            Stage1Spec::Logistic { .. } => "logistic regression",
            Stage1Spec::NaiveBayes { .. } => "naive Bayes",
        }
    }
}

/// A trained stage-1 model of either kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stage1Model {
    Logistic(LogisticModel),
    NaiveBayes(NaiveBayesModel),
}

impl Documented for Stage1Model {
    const KIND: &'static str = "stage1-model";
}

impl Stage1Model {
    pub fn train(
        spec: &Stage1Spec,
        train: &FeatureMatrix,
        seed: u64,
        executor: &crate::parallel::Executor,
    ) -> Result<Self> {
        match *spec {
            Stage1Spec::Logistic {
                learning_rate,
                epochs,
                batch_size,
                standardize,
            } => {
                let config = LogisticConfig {
                    learning_rate,
                    epochs,
                    batch_size,
                    seed,
                    standardize,
                };
                train_logistic(train, &config, executor).map(Stage1Model::Logistic)
            }
            Stage1Spec::NaiveBayes { alpha } => {
                train_naive_bayes(train, alpha, executor).map(Stage1Model::NaiveBayes)
            }
        }
    }

    pub fn predict_proba(&self, features: &FeatureMatrix) -> Result<Stage1Output> {
        match self {
            Stage1Model::Logistic(m) => m.predict_proba(features),
            Stage1Model::NaiveBayes(m) => m.predict_proba(features),
        }
    }
}

pub(crate) fn check_width(expected: usize, features: &FeatureMatrix) -> Result<()> {
    if features.dim() != expected {
        return Err(Error::Shape(format!(
            "model expects {expected} features, got {}",
            features.dim()
        )));
    }
    Ok(())
}
