//! Multinomial logistic regression trained by mini-batch gradient descent.

use std::ops::Range;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_width, Stage1Output};
use crate::error::{Error, Result};
use crate::math::softmax_rows;
use crate::parallel::Executor;
use crate::pipeline::FeatureMatrix;
use crate::rng::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Fit on z-scored columns, then fold the scaling back into the weights
    /// so the model applies to raw features.
    #[serde(default)]
    pub standardize: bool,
}

impl LogisticConfig {
    pub(crate) fn default_learning_rate() -> f64 {
        0.1
    }
    pub(crate) fn default_epochs() -> usize {
        50
    }
    pub(crate) fn default_batch_size() -> usize {
        256
    }
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            learning_rate: Self::default_learning_rate(),
            epochs: Self::default_epochs(),
            batch_size: Self::default_batch_size(),
            seed: 0,
            standardize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// K x d
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub config: LogisticConfig,
}

/// Summed (or, after [`LogisticGradient::scale`], averaged) loss and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticGradient {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub loss: f64,
}

impl LogisticGradient {
    fn zeros(classes: usize, dim: usize) -> Self {
        LogisticGradient {
            weights: Array2::zeros((classes, dim)),
            bias: Array1::zeros(classes),
            loss: 0.0,
        }
    }

    fn add(mut self, other: LogisticGradient) -> Self {
        self.weights += &other.weights;
        self.bias += &other.bias;
        self.loss += other.loss;
        self
    }

    fn scale(mut self, factor: f64) -> Self {
        self.weights *= factor;
        self.bias *= factor;
        self.loss *= factor;
        self
    }
}

impl LogisticModel {
    pub fn zeros(dim: usize, classes: usize, config: LogisticConfig) -> Self {
        LogisticModel {
            weights: Array2::zeros((classes, dim)),
            bias: Array1::zeros(classes),
            config,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn class_count(&self) -> usize {
        self.weights.nrows()
    }

    fn probabilities(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut logits = x.dot(&self.weights.t());
        logits += &self.bias;
        softmax_rows(&mut logits);
        logits
    }

    pub fn predict_proba(&self, features: &FeatureMatrix) -> Result<Stage1Output> {
        check_width(self.dim(), features)?;
        Ok(Stage1Output::from_probabilities(
            self.probabilities(features.features().view()),
        ))
    }

    /// Cross-entropy summed over the rows and its gradient. The loss is not
    /// clamped: a true-class probability that underflows to zero gives `inf`.
    fn gradient_sum(&self, x: ArrayView2<'_, f64>, labels: &[usize]) -> LogisticGradient {
        let mut delta = self.probabilities(x);
        let mut loss = 0.0;
        for (mut row, &label) in delta.axis_iter_mut(Axis(0)).zip(labels) {
            loss -= row[label].ln();
            row[label] -= 1.0;
        }
        LogisticGradient {
            weights: delta.t().dot(&x),
            bias: delta.sum_axis(Axis(0)),
            loss,
        }
    }

    /// Mean cross-entropy over the rows and its analytic gradient.
    pub fn loss_and_gradient(&self, x: ArrayView2<'_, f64>, labels: &[usize]) -> LogisticGradient {
        let n = x.nrows().max(1) as f64;
        self.gradient_sum(x, labels).scale(1.0 / n)
    }

    /// Mean cross-entropy only.
    pub fn loss(&self, x: ArrayView2<'_, f64>, labels: &[usize]) -> f64 {
        self.loss_and_gradient(x, labels).loss
    }
}

/// Fit by mini-batch gradient descent from zero weights. Each epoch visits the
/// rows in a fresh seeded shuffle; batch gradients are summed per partition by
/// `executor` and averaged over the batch.
pub fn train_logistic(
    train: &FeatureMatrix,
    config: &LogisticConfig,
    executor: &Executor,
) -> Result<LogisticModel> {
    let n = train.n_rows();
    let classes = train.class_count();
    if n == 0 {
        return Err(Error::Shape("cannot train on zero rows".into()));
    }
    if classes < 2 {
        return Err(Error::Label(format!(
            "need at least 2 classes, got {classes}"
        )));
    }
    if config.batch_size == 0 || !(config.learning_rate > 0.0) {
        return Err(Error::Config(
            "logistic regression needs batch_size >= 1 and learning_rate > 0".into(),
        ));
    }
    let mut model = LogisticModel::zeros(train.dim(), classes, *config);
    let mut rng = rng::seeded(config.seed, stream::LOGISTIC);
    let mut order: Vec<usize> = (0..n).collect();
    let scaling = config.standardize.then(|| column_scaling(train.features()));
    let scaled;
    let x = match &scaling {
        Some((mean, sd)) => {
            scaled = (train.features() - mean) / sd;
            &scaled
        }
        None => train.features(),
    };
    let labels = train.labels();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let xb = x.select(Axis(0), batch);
            let lb: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let model_ref = &model;
            let grad = executor.map_reduce(
                batch.len(),
                |_, rows: Range<usize>| {
                    Ok(model_ref.gradient_sum(xb.slice(ndarray::s![rows.clone(), ..]), &lb[rows]))
                },
                LogisticGradient::add,
                LogisticGradient::zeros(classes, train.dim()),
            )?;
            if !grad.loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    message: format!("logistic loss became {}", grad.loss),
                });
            }
            let step = config.learning_rate / batch.len() as f64;
            model.weights.scaled_add(-step, &grad.weights);
            model.bias.scaled_add(-step, &grad.bias);
        }
    }
    if let Some((mean, sd)) = scaling {
        // w·((x - μ) / σ) + b = (w / σ)·x + (b - (w / σ)·μ)
        model.weights /= &sd;
        model.bias -= &model.weights.dot(&mean);
    }
    Ok(model)
}

/// Column means and standard deviations; a constant column gets deviation 1.
fn column_scaling(x: &Array2<f64>) -> (Array1<f64>, Array1<f64>) {
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let sd = x
        .std_axis(Axis(0), 0.0)
        .mapv(|s| if s > 0.0 { s } else { 1.0 });
    (mean, sd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn matrix(rows: Vec<[f64; 2]>, labels: Vec<usize>) -> FeatureMatrix {
        let n = rows.len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        FeatureMatrix::new(Array2::from_shape_vec((n, 2), flat).unwrap(), labels, 2).unwrap()
    }

    /// 500 points on either side of the line x0 + 2 x1 = 0.3, with a margin.
    fn separable(seed: u64) -> FeatureMatrix {
        let mut rng = rng::seeded(seed, 99);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        while rows.len() < 500 {
            let p: [f64; 2] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let s = p[0] + 2.0 * p[1] - 0.3;
            if s.abs() < 0.05 {
                continue;
            }
            rows.push(p);
            labels.push(usize::from(s > 0.0));
        }
        matrix(rows, labels)
    }

    fn accuracy(model: &LogisticModel, data: &FeatureMatrix) -> f64 {
        let out = model.predict_proba(data).unwrap();
        let hits = out
            .predictions
            .iter()
            .zip(data.labels())
            .filter(|(p, l)| p == l)
            .count();
        hits as f64 / data.n_rows() as f64
    }

    #[test]
    fn standardized_fit_applies_to_raw_features() {
        // the separable set stretched onto very different column scales
        let base = separable(3);
        let mut x = base.features().clone();
        x.column_mut(0).mapv_inplace(|v| 400.0 * v + 900.0);
        x.column_mut(1).mapv_inplace(|v| 0.01 * v);
        let data = FeatureMatrix::new(x, base.labels().to_vec(), 2).unwrap();
        let config = LogisticConfig {
            learning_rate: 0.5,
            batch_size: 32,
            standardize: true,
            ..LogisticConfig::default()
        };
        let model = train_logistic(&data, &config, &Executor::default()).unwrap();
        assert!(accuracy(&model, &data) >= 0.99);

        let scaled = {
            let (mean, sd) = column_scaling(data.features());
            FeatureMatrix::new((data.features() - &mean) / &sd, data.labels().to_vec(), 2).unwrap()
        };
        let plain = LogisticConfig {
            standardize: false,
            ..config
        };
        let reference = train_logistic(&scaled, &plain, &Executor::default()).unwrap();
        let a = model.predict_proba(&data).unwrap().probabilities;
        let b = reference.predict_proba(&scaled).unwrap().probabilities;
        for (u, v) in a.iter().zip(&b) {
            assert_relative_eq!(u, v, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_epochs_is_uniform() {
        let data = separable(1);
        let config = LogisticConfig {
            epochs: 0,
            ..LogisticConfig::default()
        };
        let model = train_logistic(&data, &config, &Executor::default()).unwrap();
        let out = model.predict_proba(&data).unwrap();
        assert!(out.probabilities.iter().all(|&p| p == 0.5));
    }

    #[test]
    fn separable_set_is_learned() {
        let data = separable(2);
        let config = LogisticConfig {
            learning_rate: 0.5,
            batch_size: 32,
            epochs: 50,
            ..LogisticConfig::default()
        };
        let model = train_logistic(&data, &config, &Executor::default()).unwrap();
        assert!(accuracy(&model, &data) >= 0.99);
    }

    #[test]
    fn huge_learning_rate_diverges() {
        let mut rng = rng::seeded(5, 0);
        let rows: Vec<[f64; 2]> = (0..200)
            .map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
            .collect();
        let labels: Vec<usize> = (0..200).map(|_| rng.random_range(0..2)).collect();
        let data = matrix(rows, labels);
        let config = LogisticConfig {
            learning_rate: 1e6,
            ..LogisticConfig::default()
        };
        let err = train_logistic(&data, &config, &Executor::default()).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn width_mismatch() {
        let model = LogisticModel::zeros(3, 2, LogisticConfig::default());
        assert!(matches!(
            model.predict_proba(&separable(1)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let data = separable(3);
        let config = LogisticConfig {
            seed: 17,
            ..LogisticConfig::default()
        };
        let exec = Executor::new(3).unwrap();
        let a = train_logistic(&data, &config, &exec).unwrap();
        let b = train_logistic(&data, &config, &exec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = rng::seeded(11, 0);
        for _ in 0..20 {
            let (n, d, k) = (
                rng.random_range(1..10),
                rng.random_range(1..5),
                rng.random_range(2..5),
            );
            let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let mut model = LogisticModel::zeros(d, k, LogisticConfig::default());
            model.weights.mapv_inplace(|_| rng.random_range(-1.0..1.0));
            model.bias.mapv_inplace(|_| rng.random_range(-1.0..1.0));
            let analytic = model.loss_and_gradient(x.view(), &labels);
            let h = 1e-5;
            let mut worst: f64 = 0.0;
            for idx in 0..k * d {
                let (c, j) = (idx / d, idx % d);
                let mut plus = model.clone();
                plus.weights[[c, j]] += h;
                let mut minus = model.clone();
                minus.weights[[c, j]] -= h;
                let numeric =
                    (plus.loss(x.view(), &labels) - minus.loss(x.view(), &labels)) / (2.0 * h);
                worst = worst.max(crate::math::relative_error(
                    numeric,
                    analytic.weights[[c, j]],
                ));
            }
            for c in 0..k {
                let mut plus = model.clone();
                plus.bias[c] += h;
                let mut minus = model.clone();
                minus.bias[c] -= h;
                let numeric =
                    (plus.loss(x.view(), &labels) - minus.loss(x.view(), &labels)) / (2.0 * h);
                worst = worst.max(crate::math::relative_error(numeric, analytic.bias[c]));
            }
            assert!(worst < 1e-5, "relative error {worst}");
        }
    }

    #[test]
    fn rows_are_distributions() {
        let mut rng = rng::seeded(4, 0);
        for _ in 0..50 {
            let mut model = LogisticModel::zeros(2, 3, LogisticConfig::default());
            model
                .weights
                .mapv_inplace(|_| rng.random_range(-50.0..50.0));
            let data = separable(rng.random());
            let data =
                FeatureMatrix::new(data.features().clone(), data.labels().to_vec(), 3).unwrap();
            let out = model.predict_proba(&data).unwrap();
            for row in out.probabilities.axis_iter(Axis(0)) {
                assert_relative_eq!(row.sum(), 1.0, epsilon = 1e-9);
                assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
            }
        }
    }
}
