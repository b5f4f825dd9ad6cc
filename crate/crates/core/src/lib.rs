//! Cascade learning for tabular classification.
//!
//! A probabilistic base classifier (logistic regression or naive Bayes) is
//! trained on encoded tabular features. Its per-class probabilities are
//! appended to every feature vector, and a sigmoid multi-layer perceptron is
//! trained on the widened vectors. Gradient and sufficient-statistic sums run
//! through a partitioned map-reduce executor with a fixed combination order.
//!
//! The modules follow the data through a run:
//!
//! - [`dataset`]: CSV ingestion, imputation, label derivation, undersampling, splits
//! - [`pipeline`]: string indexing, one-hot encoding and vector assembly
//! - [`stage1`]: logistic regression and multinomial naive Bayes
//! - [`cascade`]: appending stage-1 outputs to the features
//! - [`mlp`]: the backprop network
//! - [`parallel`]: the partitioned executor
//! - [`metrics`]: confusion matrices, accuracy, F1, per-class recall
//! - [`experiment`]: configs, task presets, the runner and report emission

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cascade;
pub mod dataset;
pub mod document;
pub mod error;
pub mod experiment;
mod math;
pub mod metrics;
pub mod mlp;
pub mod parallel;
pub mod pipeline;
mod rng;
pub mod stage1;

pub use error::{Error, Result};
