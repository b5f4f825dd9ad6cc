//! Building the "knowledge" matrix: every encoded row is extended with the
//! stage-1 class probabilities and, optionally, the stage-1 predicted class id.

use ndarray::{concatenate, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::FeatureMatrix;
use crate::stage1::Stage1Output;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeOptions {
    #[serde(default = "yes")]
    pub include_probabilities: bool,
    #[serde(default)]
    pub include_prediction_label: bool,
}

fn yes() -> bool {
    true
}

impl Default for CascadeOptions {
    fn default() -> Self {
        CascadeOptions {
            include_probabilities: true,
            include_prediction_label: false,
        }
    }
}

impl CascadeOptions {
    pub fn validate(&self) -> Result<()> {
        if !self.include_probabilities && !self.include_prediction_label {
            return Err(Error::Config(
                "cascade must append probabilities, the prediction label, or both".into(),
            ));
        }
        Ok(())
    }

    /// Columns appended for a stage-1 model with `classes` classes.
    pub fn extra_width(&self, classes: usize) -> usize {
        usize::from(self.include_probabilities) * classes
            + usize::from(self.include_prediction_label)
    }
}

/// Append stage-1 outputs to each row. The original columns are kept as the
/// prefix; the label set is unchanged.
pub fn augment(
    features: &FeatureMatrix,
    stage1: &Stage1Output,
    options: CascadeOptions,
) -> Result<FeatureMatrix> {
    options.validate()?;
    if stage1.n_rows() != features.n_rows() {
        return Err(Error::Shape(format!(
            "{} stage-1 rows for {} feature rows",
            stage1.n_rows(),
            features.n_rows()
        )));
    }
    let mut blocks = vec![features.features().view()];
    if options.include_probabilities {
        blocks.push(stage1.probabilities.view());
    }
    let predicted: Array2<f64> =
        Array2::from_shape_fn((stage1.n_rows(), 1), |(i, _)| stage1.predictions[i] as f64);
    if options.include_prediction_label {
        blocks.push(predicted.view());
    }
    let widened = concatenate(Axis(1), &blocks).map_err(|e| Error::Shape(e.to_string()))?;
    FeatureMatrix::new(widened, features.labels().to_vec(), features.class_count())
}

/// Swap in a different label set (for example stage-3 bin labels) over the same features.
pub fn relabel(
    features: &FeatureMatrix,
    new_labels: &[usize],
    class_count: usize,
) -> Result<FeatureMatrix> {
    if new_labels.len() != features.n_rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} rows",
            new_labels.len(),
            features.n_rows()
        )));
    }
    FeatureMatrix::new(
        features.features().clone(),
        new_labels.to_vec(),
        class_count,
    )
}
