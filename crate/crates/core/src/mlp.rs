//! Multi-layer perceptron: sigmoid hidden layers, softmax output,
//! cross-entropy loss, plain mini-batch gradient descent.
//!
//! Layer `l` maps `a[l-1]` to `a[l] = act(a[l-1] W[l]ᵀ + b[l])`, with `W[l]`
//! stored as `out x in`. Backpropagation uses the usual softmax/cross-entropy
//! shortcut `δ[L] = p - onehot(y)` and `δ[l-1] = (δ[l] W[l]) ⊙ a(1 - a)`.

use std::ops::Range;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::document::Documented;
use crate::error::{Error, Result};
use crate::math::{argmax, relative_error, sigmoid, softmax_in_place, softmax_rows};
use crate::parallel::Executor;
use crate::pipeline::FeatureMatrix;
use crate::rng::{self, stream};

/// Probabilities are clamped here before taking the log in [`loss`].
pub const LOG_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpConfig {
    /// `[d_in, h1, ..., d_out]`
    pub layer_sizes: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default = "MlpConfig::default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

impl MlpConfig {
    pub fn default_learning_rate() -> f64 {
        0.05
    }

    pub fn new(layer_sizes: Vec<usize>) -> Self {
        MlpConfig {
            layer_sizes,
            epochs: 10,
            batch_size: 32,
            learning_rate: Self::default_learning_rate(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 3 {
            return Err(Error::Config(format!(
                "an MLP needs at least 3 layer sizes (input, hidden, output), got {:?}",
                self.layer_sizes
            )));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::Config(format!(
                "layer sizes must be at least 1, got {:?}",
                self.layer_sizes
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// out x in
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub config: MlpConfig,
}

impl Documented for MlpModel {
    const KIND: &'static str = "mlp-model";
}

/// Mean training loss of each epoch, in order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epoch_loss: Vec<f64>,
}

/// Gradients with the same shapes as the model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    /// Clamped cross-entropy, as reported by [`loss`].
    pub loss: f64,
    /// Cross-entropy without the clamp; `inf` once a true-class probability underflows.
    pub raw_loss: f64,
}

impl Gradients {
    fn zeros(model: &MlpModel) -> Self {
        Gradients {
            weights: model
                .layers
                .iter()
                .map(|l| Array2::zeros(l.weights.raw_dim()))
                .collect(),
            biases: model
                .layers
                .iter()
                .map(|l| Array1::zeros(l.bias.len()))
                .collect(),
            loss: 0.0,
            raw_loss: 0.0,
        }
    }

    fn add(mut self, other: Gradients) -> Self {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += b;
        }
        self.loss += other.loss;
        self.raw_loss += other.raw_loss;
        self
    }

    fn scale(mut self, factor: f64) -> Self {
        for w in &mut self.weights {
            *w *= factor;
        }
        for b in &mut self.biases {
            *b *= factor;
        }
        self.loss *= factor;
        self.raw_loss *= factor;
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .flat_map(|w| w.iter())
            .chain(self.biases.iter().flat_map(|b| b.iter()))
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Glorot-uniform weights `U(-r, r)`, `r = sqrt(6 / (fan_in + fan_out))`, zero biases.
pub fn init_network(config: &MlpConfig) -> Result<MlpModel> {
    config.validate()?;
    let mut rng = rng::seeded(config.seed, stream::MLP_INIT);
    let layers = config
        .layer_sizes
        .windows(2)
        .map(|pair| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let r = (6.0 / (fan_in + fan_out) as f64).sqrt();
            Layer {
                weights: Array2::from_shape_simple_fn((fan_out, fan_in), || {
                    rng.random_range(-r..r)
                }),
                bias: Array1::zeros(fan_out),
            }
        })
        .collect();
    Ok(MlpModel {
        layers,
        config: config.clone(),
    })
}

/// `-ln(max(p[label], 1e-12))`
pub fn loss(probabilities: ArrayView1<'_, f64>, label: usize) -> f64 {
    -probabilities[label].max(LOG_CLAMP).ln()
}

impl MlpModel {
    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers
            .last()
            .expect("at least one layer")
            .weights
            .nrows()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    fn check_rows(&self, width: usize) -> Result<()> {
        if width != self.input_dim() {
            return Err(Error::Shape(format!(
                "network expects {} inputs, got {width}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Class probabilities for one input vector.
    pub fn forward(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        self.check_rows(x.len())?;
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            a = layer.weights.dot(&a) + &layer.bias;
            if l < last {
                a.mapv_inplace(sigmoid);
            } else {
                softmax_in_place(a.view_mut());
            }
        }
        Ok(a)
    }

    /// Activations of every layer for a batch; index 0 is the input itself.
    fn activations(&self, x: ArrayView2<'_, f64>) -> Vec<Array2<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_owned());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = acts[l].dot(&layer.weights.t());
            z += &layer.bias;
            if l < last {
                z.mapv_inplace(sigmoid);
            } else {
                softmax_rows(&mut z);
            }
            acts.push(z);
        }
        acts
    }

    /// Class probabilities for each row, `n x d_out`.
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_rows(x.ncols())?;
        Ok(self.activations(x).pop().expect("output layer"))
    }

    pub fn predict_proba(&self, data: &FeatureMatrix) -> Result<Array2<f64>> {
        self.forward_batch(data.features().view())
    }

    pub fn predict(&self, data: &FeatureMatrix) -> Result<Vec<usize>> {
        let p = self.predict_proba(data)?;
        Ok(p.axis_iter(Axis(0)).map(argmax).collect())
    }

    /// Loss and gradient summed (not averaged) over the rows.
    fn gradient_sum(&self, x: ArrayView2<'_, f64>, labels: &[usize]) -> Gradients {
        let mut acts = self.activations(x);
        let mut delta = acts.pop().expect("output layer");
        let (mut clamped, mut raw) = (0.0, 0.0);
        for (mut row, &y) in delta.axis_iter_mut(Axis(0)).zip(labels) {
            clamped += loss(row.view(), y);
            raw -= row[y].ln();
            row[y] -= 1.0;
        }
        let depth = self.layers.len();
        let mut weights = Vec::with_capacity(depth);
        let mut biases = Vec::with_capacity(depth);
        for l in (0..depth).rev() {
            let input = &acts[l];
            weights.push(delta.t().dot(input));
            biases.push(delta.sum_axis(Axis(0)));
            if l > 0 {
                let mut back = delta.dot(&self.layers[l].weights);
                back.zip_mut_with(input, |d, &a| *d *= a * (1.0 - a));
                delta = back;
            }
        }
        weights.reverse();
        biases.reverse();
        Gradients {
            weights,
            biases,
            loss: clamped,
            raw_loss: raw,
        }
    }

    fn check_labels(&self, n: usize, labels: &[usize]) -> Result<()> {
        if labels.len() != n {
            return Err(Error::Shape(format!(
                "{} labels for {n} rows",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= self.output_dim()) {
            return Err(Error::Label(format!(
                "label {bad} out of range for {} outputs",
                self.output_dim()
            )));
        }
        Ok(())
    }

    /// Analytic gradient of the mean batch loss.
    pub fn backward(&self, x: ArrayView2<'_, f64>, labels: &[usize]) -> Result<Gradients> {
        self.check_rows(x.ncols())?;
        self.check_labels(x.nrows(), labels)?;
        let n = x.nrows().max(1) as f64;
        Ok(self.gradient_sum(x, labels).scale(1.0 / n))
    }

    /// Mean clamped loss over the rows.
    pub fn mean_loss(&self, x: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64> {
        let p = self.forward_batch(x)?;
        self.check_labels(x.nrows(), labels)?;
        let total: f64 = p
            .axis_iter(Axis(0))
            .zip(labels)
            .map(|(r, &y)| loss(r, y))
            .sum();
        Ok(total / x.nrows().max(1) as f64)
    }

    fn step(&mut self, grad: &Gradients, rate: f64) {
        for ((layer, gw), gb) in self.layers.iter_mut().zip(&grad.weights).zip(&grad.biases) {
            layer.weights.scaled_add(-rate, gw);
            layer.bias.scaled_add(-rate, gb);
        }
    }
}

/// Train `model` on `data` for `config.epochs` epochs.
///
/// Each epoch visits the rows in a fresh shuffle drawn from `config.seed`,
/// cuts them into batches of `config.batch_size` (the last may be short) and
/// takes one step per batch along the batch-mean gradient. Partial gradients
/// are summed per partition by `executor`.
pub fn train(
    model: MlpModel,
    data: &FeatureMatrix,
    config: &MlpConfig,
    executor: &Executor,
) -> Result<(MlpModel, TrainHistory)> {
    config.validate()?;
    let mut model = model;
    model.check_rows(data.dim())?;
    if data.class_count() != model.output_dim() {
        return Err(Error::Config(format!(
            "network has {} outputs but the data has {} classes",
            model.output_dim(),
            data.class_count()
        )));
    }
    let n = data.n_rows();
    if n == 0 {
        return Err(Error::Shape("cannot train on zero rows".into()));
    }
    let x = data.features();
    let labels = data.labels();
    let mut rng = rng::seeded(config.seed, stream::MLP_SHUFFLE);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = TrainHistory::default();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let xb = x.select(Axis(0), batch);
            let lb: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let frozen = &model;
            let grad = executor.map_reduce(
                batch.len(),
                |_, rows: Range<usize>| {
                    Ok(frozen.gradient_sum(xb.slice(s![rows.clone(), ..]), &lb[rows]))
                },
                Gradients::add,
                Gradients::zeros(frozen),
            )?;
            if !grad.raw_loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    message: format!("cross-entropy became {}", grad.raw_loss),
                });
            }
            epoch_loss += grad.loss;
            model.step(&grad, config.learning_rate / batch.len() as f64);
            if !model.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    message: "parameters became non-finite".into(),
                });
            }
        }
        history.epoch_loss.push(epoch_loss / n as f64);
    }
    model.config = config.clone();
    Ok((model, history))
}

/// Largest relative error between [`MlpModel::backward`] and central finite
/// differences of the mean loss, over every parameter.
pub fn check_gradients(
    model: &MlpModel,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step h must be positive, got {h}")));
    }
    let analytic = model.backward(x, labels)?;
    // the unclamped loss, so the finite differences see the same function
    let raw = |m: &MlpModel| m.gradient_sum(x, labels).raw_loss / x.nrows().max(1) as f64;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for l in 0..model.layers.len() {
        for idx in 0..model.layers[l].weights.len() {
            let (r, c) = (
                idx / model.layers[l].weights.ncols(),
                idx % model.layers[l].weights.ncols(),
            );
            let orig = model.layers[l].weights[[r, c]];
            probe.layers[l].weights[[r, c]] = orig + h;
            let up = raw(&probe);
            probe.layers[l].weights[[r, c]] = orig - h;
            let down = raw(&probe);
            probe.layers[l].weights[[r, c]] = orig;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max(relative_error(analytic.weights[l][[r, c]], numeric));
        }
        for j in 0..model.layers[l].bias.len() {
            let orig = model.layers[l].bias[j];
            probe.layers[l].bias[j] = orig + h;
            let up = raw(&probe);
            probe.layers[l].bias[j] = orig - h;
            let down = raw(&probe);
            probe.layers[l].bias[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max(relative_error(analytic.biases[l][j], numeric));
        }
    }
    Ok(worst)
}

/// Gradient check on a freshly initialised network with `n_rows` standard
/// normal inputs and uniformly drawn labels.
pub fn gradient_check(config: &MlpConfig, n_rows: usize, h: f64, seed: u64) -> Result<f64> {
    let model = init_network(&MlpConfig {
        seed,
        ..config.clone()
    })?;
    let mut rng = rng::seeded(seed, stream::GRADCHECK);
    let x = Array2::from_shape_simple_fn((n_rows, config.input_dim()), || {
        rng.sample::<f64, _>(StandardNormal)
    });
    let labels: Vec<usize> = (0..n_rows)
        .map(|_| rng.random_range(0..config.output_dim()))
        .collect();
    check_gradients(&model, x.view(), &labels, h)
}
