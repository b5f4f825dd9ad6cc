//! Multinomial naive Bayes with additive (Laplace) smoothing.
//!
//! Each feature value is treated as an event count, so the model is defined
//! for any non-negative features: one-hot blocks and probability columns
//! alike. For class `c` and feature `j`,
//!
//! ```text
//! log θ[c][j] = ln((count[c][j] + α) / (Σ_j count[c][j] + α d))
//! ```
//!
//! and the posterior of a row `x` is proportional to `prior[c] · Π_j θ[c][j]^x[j]`.

use std::ops::Range;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{check_width, Stage1Output};
use crate::error::{Error, Result};
use crate::math::softmax_rows;
use crate::parallel::Executor;
use crate::pipeline::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub log_prior: Array1<f64>,
    /// K x d
    pub log_likelihood: Array2<f64>,
    pub alpha: f64,
}

impl NaiveBayesModel {
    pub(crate) fn default_alpha() -> f64 {
        1.0
    }

    pub fn dim(&self) -> usize {
        self.log_likelihood.ncols()
    }

    pub fn class_count(&self) -> usize {
        self.log_prior.len()
    }

    pub fn predict_proba(&self, features: &FeatureMatrix) -> Result<Stage1Output> {
        check_width(self.dim(), features)?;
        let mut joint = features.features().dot(&self.log_likelihood.t());
        joint += &self.log_prior;
        softmax_rows(&mut joint);
        Ok(Stage1Output::from_probabilities(joint))
    }
}

struct Counts {
    per_class: Array2<f64>,
    rows: Array1<f64>,
}

impl Counts {
    fn add(mut self, other: Counts) -> Counts {
        self.per_class += &other.per_class;
        self.rows += &other.rows;
        self
    }
}

pub fn train_naive_bayes(
    train: &FeatureMatrix,
    alpha: f64,
    executor: &Executor,
) -> Result<NaiveBayesModel> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!(
            "smoothing alpha must be > 0, got {alpha}"
        )));
    }
    let n = train.n_rows();
    if n == 0 {
        return Err(Error::Shape("cannot train on zero rows".into()));
    }
    let x = train.features();
    if let Some(bad) = x.iter().find(|&&v| v < 0.0) {
        return Err(Error::Domain(format!(
            "naive Bayes needs non-negative features, found {bad}"
        )));
    }
    let (k, d) = (train.class_count(), train.dim());
    let labels = train.labels();
    let counts = executor.map_reduce(
        n,
        |_, rows: Range<usize>| {
            let mut per_class = Array2::<f64>::zeros((k, d));
            let mut seen = Array1::<f64>::zeros(k);
            for i in rows {
                let c = labels[i];
                per_class.row_mut(c).scaled_add(1.0, &x.row(i));
                seen[c] += 1.0;
            }
            Ok(Counts {
                per_class,
                rows: seen,
            })
        },
        Counts::add,
        Counts {
            per_class: Array2::zeros((k, d)),
            rows: Array1::zeros(k),
        },
    )?;

    let log_prior = counts.rows.mapv(|c| (c / n as f64).ln());
    let totals = counts.per_class.sum_axis(Axis(1));
    let mut log_likelihood = counts.per_class;
    for (mut row, total) in log_likelihood.axis_iter_mut(Axis(0)).zip(totals) {
        let denom = total + alpha * d as f64;
        row.mapv_inplace(|c| ((c + alpha) / denom).ln());
    }
    Ok(NaiveBayesModel {
        log_prior,
        log_likelihood,
        alpha,
    })
}
