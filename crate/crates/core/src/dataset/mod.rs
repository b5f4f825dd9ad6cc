//! Columnar tables and the row-level preprocessing that happens before any
//! feature encoding: ingestion, imputation, label derivation, resampling and
//! splitting.

mod csv_io;
mod synthetic;
mod transform;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_csv, write_csv, ColumnDecl, CsvSchema, MISSING_TOKEN};
pub use synthetic::{gen_synthetic_h1b, h1b_schema, SOC_NAMES};
pub use transform::{
    categorize, derive_match_label, derive_threshold_label, equal_frequency_bin, impute_missing,
    split, undersample, BinSpec, ImputePolicy, SplitPair,
};

/// Name of the column that label-deriving operations write.
pub const LABEL: &str = "label";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Numeric,
}

/// Cell storage; `None` is a missing cell waiting for imputation.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Categorical(Vec<Option<String>>),
    Numeric(Vec<Option<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    data: ColumnData,
}

impl Column {
    pub fn new(name: impl Into<String>, data: ColumnData) -> Self {
        Column {
            name: name.into(),
            data,
        }
    }

    pub fn numeric(name: impl Into<String>, values: impl IntoIterator<Item = f64>) -> Self {
        Column::new(
            name,
            ColumnData::Numeric(values.into_iter().map(Some).collect()),
        )
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        values: impl IntoIterator<Item = S>,
    ) -> Self {
        Column::new(
            name,
            ColumnData::Categorical(values.into_iter().map(|v| Some(v.into())).collect()),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn data(&self) -> &ColumnData {
        &self.data
    }

    pub fn kind(&self) -> ColumnKind {
        match self.data {
            ColumnData::Categorical(_) => ColumnKind::Categorical,
            ColumnData::Numeric(_) => ColumnKind::Numeric,
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ColumnData::Categorical(v) => v.len(),
            ColumnData::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn missing_count(&self) -> usize {
        match &self.data {
            ColumnData::Categorical(v) => v.iter().filter(|c| c.is_none()).count(),
            ColumnData::Numeric(v) => v.iter().filter(|c| c.is_none()).count(),
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        let data = match &self.data {
            ColumnData::Categorical(v) => {
                ColumnData::Categorical(rows.iter().map(|&i| v[i].clone()).collect())
            }
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&i| v[i]).collect()),
        };
        Column::new(self.name.clone(), data)
    }
}

/// Named, typed columns of equal length plus an optional label column.
///
/// Immutable once built: every operation returns a new table.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnarTable {
    columns: Vec<Column>,
    n_rows: usize,
    label_column: Option<String>,
}

impl ColumnarTable {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Column::len);
        let mut seen = HashSet::new();
        for column in &columns {
            if !seen.insert(column.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", column.name)));
            }
            if column.len() != n_rows {
                return Err(Error::Schema(format!(
                    "column `{}` has {} values, expected {n_rows}",
                    column.name,
                    column.len()
                )));
            }
            if let ColumnData::Numeric(values) = &column.data {
                if values.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Schema(format!(
                        "column `{}` holds a non-finite value",
                        column.name
                    )));
                }
            }
        }
        Ok(ColumnarTable {
            columns,
            n_rows,
            label_column: None,
        })
    }

    /// Designate `name` as the label column. It must be numeric.
    pub fn with_label(mut self, name: &str) -> Result<Self> {
        let column = self.column(name)?;
        if column.kind() != ColumnKind::Numeric {
            return Err(Error::Schema(format!(
                "label column `{name}` must hold numeric class ids"
            )));
        }
        self.label_column = Some(name.to_owned());
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(Column::name)
    }

    pub fn label_column(&self) -> Option<&str> {
        self.label_column.as_deref()
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::Schema(format!("no column named `{name}`")))
    }

    pub fn has_missing(&self) -> bool {
        self.columns.iter().any(|c| c.missing_count() > 0)
    }

    /// Values of a numeric column; fails on a categorical column or a missing cell.
    pub fn numeric(&self, name: &str) -> Result<Vec<f64>> {
        match &self.column(name)?.data {
            ColumnData::Numeric(v) => v
                .iter()
                .map(|c| c.ok_or_else(|| missing_cell(name)))
                .collect(),
            ColumnData::Categorical(_) => {
                Err(Error::Schema(format!("column `{name}` is not numeric")))
            }
        }
    }

    pub fn categorical(&self, name: &str) -> Result<Vec<&str>> {
        match &self.column(name)?.data {
            ColumnData::Categorical(v) => v
                .iter()
                .map(|c| c.as_deref().ok_or_else(|| missing_cell(name)))
                .collect(),
            ColumnData::Numeric(_) => {
                Err(Error::Schema(format!("column `{name}` is not categorical")))
            }
        }
    }

    /// Class ids from the label column: non-negative integers stored as numbers.
    pub fn labels(&self) -> Result<Vec<usize>> {
        let name = self
            .label_column
            .as_deref()
            .ok_or_else(|| Error::Schema("table has no label column".into()))?;
        self.numeric(name)?
            .into_iter()
            .map(|v| {
                if v >= 0.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(Error::Label(format!(
                        "label column `{name}` holds {v}, not a class id"
                    )))
                }
            })
            .collect()
    }

    /// Per-class row counts, indexed by class id.
    pub fn class_counts(&self) -> Result<Vec<usize>> {
        let labels = self.labels()?;
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![0; k];
        for l in labels {
            counts[l] += 1;
        }
        Ok(counts)
    }

    /// A new table holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_rows) {
            return Err(Error::Shape(format!(
                "row {bad} out of range for {} rows",
                self.n_rows
            )));
        }
        Ok(ColumnarTable {
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            n_rows: rows.len(),
            label_column: self.label_column.clone(),
        })
    }

    /// Replace the column of the same name, or append it.
    pub fn with_column(&self, column: Column) -> Result<Self> {
        let mut columns = self.columns.clone();
        match columns.iter_mut().find(|c| c.name == column.name) {
            Some(slot) => *slot = column,
            None => columns.push(column),
        }
        let mut table = ColumnarTable::new(columns)?;
        if let Some(label) = &self.label_column {
            table = table.with_label(label)?;
        }
        Ok(table)
    }

    /// Keep only the rows whose categorical `column` equals `value`.
    pub fn filter_equals(&self, column: &str, value: &str) -> Result<Self> {
        let rows: Vec<usize> = self
            .categorical(column)?
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == value)
            .map(|(i, _)| i)
            .collect();
        self.select_rows(&rows)
    }
}

fn missing_cell(column: &str) -> Error {
    Error::Schema(format!(
        "column `{column}` still has missing cells; impute first"
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ColumnarTable {
        ColumnarTable::new(vec![
            Column::numeric("wage", [1.0, 2.0, 3.0]),
            Column::categorical("state", ["CA", "NY", "CA"]),
        ])
        .unwrap()
    }

    #[test]
    fn rejects_ragged_and_duplicate_columns() {
        let ragged = ColumnarTable::new(vec![
            Column::numeric("a", [1.0, 2.0]),
            Column::numeric("b", [1.0]),
        ]);
        assert!(matches!(ragged, Err(Error::Schema(_))));
        let dup = ColumnarTable::new(vec![
            Column::numeric("a", [1.0]),
            Column::numeric("a", [1.0]),
        ]);
        assert!(matches!(dup, Err(Error::Schema(_))));
    }

    #[test]
    fn rejects_non_finite_numbers() {
        let t = ColumnarTable::new(vec![Column::numeric("a", [1.0, f64::NAN])]);
        assert!(matches!(t, Err(Error::Schema(_))));
    }

    #[test]
    fn select_and_filter() {
        let t = small();
        let picked = t.select_rows(&[2, 0]).unwrap();
        assert_eq!(picked.numeric("wage").unwrap(), vec![3.0, 1.0]);
        let ca = t.filter_equals("state", "CA").unwrap();
        assert_eq!(ca.n_rows(), 2);
        assert!(t.select_rows(&[3]).is_err());
    }

    #[test]
    fn labels_must_be_class_ids() {
        let t = small()
            .with_column(Column::numeric(LABEL, [0.0, 1.5, 1.0]))
            .unwrap()
            .with_label(LABEL)
            .unwrap();
        assert!(matches!(t.labels(), Err(Error::Label(_))));
        assert!(small().with_label("state").is_err());
    }
}
