//! Feature pipeline: string indexing, one-hot encoding and vector assembly.
//!
//! Each categorical column gets an index map ordered by descending training
//! frequency (ties broken lexicographically). A row's feature vector is the
//! concatenation of one one-hot block per categorical column, in declared
//! order, followed by the numeric columns copied through unscaled.
//!
//! A pipeline is frozen once fitted; transforming other tables never changes
//! an index map.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, ColumnarTable};
use crate::document::Documented;
use crate::error::{Error, Result};

/// Category → dense index for one column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "IndexRepr", into = "IndexRepr")]
pub struct StringIndexModel {
    column: String,
    categories: Vec<String>,
    index_of: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct IndexRepr {
    column: String,
    categories: Vec<String>,
}

impl From<IndexRepr> for StringIndexModel {
    fn from(r: IndexRepr) -> Self {
        StringIndexModel::from_ordered(r.column, r.categories)
    }
}

impl From<StringIndexModel> for IndexRepr {
    fn from(m: StringIndexModel) -> Self {
        IndexRepr {
            column: m.column,
            categories: m.categories,
        }
    }
}

impl StringIndexModel {
    fn from_ordered(column: String, categories: Vec<String>) -> Self {
        let index_of = categories
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        StringIndexModel {
            column,
            categories,
            index_of,
        }
    }

    pub fn column(&self) -> &str {
        &self.column
    }

    pub fn cardinality(&self) -> usize {
        self.categories.len()
    }

    pub fn index_of(&self, category: &str) -> Option<usize> {
        self.index_of.get(category).copied()
    }

    /// Inverse map.
    pub fn category(&self, index: usize) -> Option<&str> {
        self.categories.get(index).map(String::as_str)
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }
}

pub fn fit_string_indexer(table: &ColumnarTable, column: &str) -> Result<StringIndexModel> {
    let col = table.column(column)?;
    if col.kind() != ColumnKind::Categorical {
        return Err(Error::Fit(format!("column `{column}` is not categorical")));
    }
    let values = table
        .categorical(column)
        .map_err(|e| Error::Fit(e.to_string()))?;
    if values.is_empty() {
        return Err(Error::Fit(format!("column `{column}` is empty")));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(StringIndexModel::from_ordered(
        column.to_owned(),
        ranked.into_iter().map(|(c, _)| c.to_owned()).collect(),
    ))
}

/// Standard basis vector for `category`.
pub fn one_hot(model: &StringIndexModel, category: &str) -> Result<Vec<f64>> {
    let index = model
        .index_of(category)
        .ok_or_else(|| Error::UnseenCategory {
            column: model.column.clone(),
            category: category.to_owned(),
        })?;
    let mut v = vec![0.0; model.cardinality()];
    v[index] = 1.0;
    Ok(v)
}

/// What to do with a category that was not seen during fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnseenPolicy {
    #[default]
    Reject,
    /// Encode as an all-zero block. Breaks the one-hot invariant for that row.
    ZeroVector,
}

/// Where one source column lands in the assembled vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub column: String,
    pub kind: ColumnKind,
    pub offset: usize,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    categorical: Vec<StringIndexModel>,
    numeric: Vec<String>,
    layout: Vec<BlockLayout>,
    feature_dim: usize,
    /// Classes seen in the fitting table's label column, if it had one.
    class_count: Option<usize>,
    unseen: UnseenPolicy,
}

impl Documented for FittedPipeline {
    const KIND: &'static str = "fitted-pipeline";
}

/// Fit index maps for `categorical` columns and lay out the feature vector.
pub fn fit_pipeline(
    table: &ColumnarTable,
    categorical: &[String],
    numeric: &[String],
) -> Result<FittedPipeline> {
    if let Some(dup) = categorical.iter().find(|c| numeric.contains(c)) {
        return Err(Error::Schema(format!(
            "column `{dup}` is listed as both categorical and numeric"
        )));
    }
    for (i, name) in categorical.iter().chain(numeric).enumerate() {
        if categorical
            .iter()
            .chain(numeric)
            .skip(i + 1)
            .any(|n| n == name)
        {
            return Err(Error::Schema(format!("column `{name}` listed twice")));
        }
    }
    for name in numeric {
        if table.column(name)?.kind() != ColumnKind::Numeric {
            return Err(Error::Schema(format!("column `{name}` is not numeric")));
        }
    }
    let mut models = Vec::with_capacity(categorical.len());
    for name in categorical {
        if table.column(name)?.kind() != ColumnKind::Categorical {
            return Err(Error::Schema(format!("column `{name}` is not categorical")));
        }
        models.push(fit_string_indexer(table, name)?);
    }

    let mut layout = Vec::with_capacity(models.len() + numeric.len());
    let mut offset = 0;
    for m in &models {
        layout.push(BlockLayout {
            column: m.column.clone(),
            kind: ColumnKind::Categorical,
            offset,
            width: m.cardinality(),
        });
        offset += m.cardinality();
    }
    for name in numeric {
        layout.push(BlockLayout {
            column: name.clone(),
            kind: ColumnKind::Numeric,
            offset,
            width: 1,
        });
        offset += 1;
    }

    let class_count = match table.label_column() {
        Some(_) => Some(
            table
                .labels()?
                .into_iter()
                .max()
                .map_or(2, |m| (m + 1).max(2)),
        ),
        None => None,
    };

    Ok(FittedPipeline {
        categorical: models,
        numeric: numeric.to_vec(),
        layout,
        feature_dim: offset,
        class_count,
        unseen: UnseenPolicy::Reject,
    })
}

impl FittedPipeline {
    pub fn with_unseen_policy(mut self, policy: UnseenPolicy) -> Self {
        self.unseen = policy;
        self
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn class_count(&self) -> Option<usize> {
        self.class_count
    }

    pub fn layout(&self) -> &[BlockLayout] {
        &self.layout
    }

    pub fn categorical_models(&self) -> &[StringIndexModel] {
        &self.categorical
    }

    pub fn numeric_columns(&self) -> &[String] {
        &self.numeric
    }

    /// Encode every row of `table`. The table must carry a label column.
    pub fn transform(&self, table: &ColumnarTable) -> Result<FeatureMatrix> {
        let labels = table.labels()?;
        let n = table.n_rows();
        let mut features = Array2::<f64>::zeros((n, self.feature_dim));

        for (model, block) in self.categorical.iter().zip(&self.layout) {
            let values = table.categorical(&model.column)?;
            for (row, value) in values.into_iter().enumerate() {
                match model.index_of(value) {
                    Some(i) => features[[row, block.offset + i]] = 1.0,
                    None if self.unseen == UnseenPolicy::ZeroVector => {}
                    None => {
                        return Err(Error::UnseenCategory {
                            column: model.column.clone(),
                            category: value.to_owned(),
                        })
                    }
                }
            }
        }
        let numeric_blocks = &self.layout[self.categorical.len()..];
        for (name, block) in self.numeric.iter().zip(numeric_blocks) {
            let values = table.numeric(name)?;
            features
                .column_mut(block.offset)
                .iter_mut()
                .zip(values)
                .for_each(|(slot, v)| *slot = v);
        }

        let observed = labels.iter().max().map_or(0, |m| m + 1);
        let class_count = match self.class_count {
            Some(k) if observed > k => {
                return Err(Error::Label(format!(
                    "label {} outside the {k} classes seen at fit",
                    observed - 1
                )))
            }
            Some(k) => k,
            None => observed.max(2),
        };
        FeatureMatrix::new(features, labels, class_count)
    }

    /// Category recovered from a categorical block of an encoded row
    /// (argmax of the block through the inverse index map).
    pub fn decode(&self, row: ArrayView1<'_, f64>, block: usize) -> Option<&str> {
        let model = self.categorical.get(block)?;
        let layout = &self.layout[block];
        let slice = row.slice(ndarray::s![layout.offset..layout.offset + layout.width]);
        let (best, &value) = slice
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))?;
        (value > 0.0).then(|| model.category(best)).flatten()
    }
}

/// Dense encoded rows with their class ids.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    features: Array2<f64>,
    labels: Vec<usize>,
    class_count: usize,
}

impl FeatureMatrix {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::Label(format!(
                "label {bad} outside {class_count} classes"
            )));
        }
        Ok(FeatureMatrix {
            features,
            labels,
            class_count,
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        FeatureMatrix {
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            class_count: self.class_count,
        }
    }

    pub(crate) fn into_parts(self) -> (Array2<f64>, Vec<usize>, usize) {
        (self.features, self.labels, self.class_count)
    }
}
