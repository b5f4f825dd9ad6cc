//! Experiment configuration documents (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cascade::CascadeOptions;
use crate::dataset::{ColumnDecl, ColumnKind, CsvSchema, MISSING_TOKEN};
use crate::error::{Error, Result};
use crate::pipeline::UnseenPolicy;
use crate::stage1::Stage1Spec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub task: String,
    /// One full run per seed; the seed drives the split, undersampling and all training draws.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "one")]
    pub partitions: usize,
    /// Fit the pipeline and the stage-1 model on every row, test rows included,
    /// before scoring the test split. Off by default because the stage-3 test
    /// features then carry information from the test labels.
    #[serde(default)]
    pub stage1_on_full_data: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub data: DataSource,
    pub features: FeatureSpec,
    #[serde(default)]
    pub preprocess: Preprocess,
    pub label: LabelSpec,
    /// A different label set for the network only; stage 1 keeps `label`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage3_label: Option<LabelSpec>,
    #[serde(default)]
    pub split: SplitSpec,
    pub stage1: Stage1Spec,
    #[serde(default)]
    pub cascade: CascadeOptions,
    pub mlp: MlpSection,
}

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// The built-in visa-application generator.
    Synthetic {
        rows: usize,
        positive_fraction: f64,
        #[serde(default)]
        seed: u64,
    },
    Csv {
        path: PathBuf,
        #[serde(default = "yes")]
        header: bool,
        #[serde(default = "default_missing")]
        missing_tokens: Vec<String>,
        columns: Vec<ColumnSpec>,
    },
}

fn default_missing() -> Vec<String> {
    vec![MISSING_TOKEN.to_owned()]
}

/// One column (`name`), or `count` columns named `prefix1..prefixN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    pub kind: ColumnKind,
}

impl ColumnSpec {
    fn expand(&self) -> Result<Vec<ColumnDecl>> {
        match (&self.name, &self.prefix, self.count) {
            (Some(name), None, None) => Ok(vec![ColumnDecl::new(name.clone(), self.kind)]),
            (None, Some(prefix), Some(count)) if count > 0 => Ok((1..=count)
                .map(|i| ColumnDecl::new(format!("{prefix}{i}"), self.kind))
                .collect()),
            _ => Err(Error::Config(
                "a column entry needs either `name`, or `prefix` with a positive `count`".into(),
            )),
        }
    }
}

impl DataSource {
    pub fn csv_schema(&self) -> Result<Option<CsvSchema>> {
        let DataSource::Csv {
            header,
            missing_tokens,
            columns,
            ..
        } = self
        else {
            return Ok(None);
        };
        let mut decls = Vec::new();
        for c in columns {
            decls.extend(c.expand()?);
        }
        let mut schema = CsvSchema::new(decls);
        schema.has_header = *header;
        schema.missing_tokens = missing_tokens.clone();
        Ok(Some(schema))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub numeric: Vec<String>,
    /// Use every numeric column of the data that does not define a label,
    /// in file order, in place of `numeric`.
    #[serde(default)]
    pub all_numeric: bool,
    /// How the fitted pipeline treats categories first seen at transform time.
    #[serde(default)]
    pub unseen: UnseenPolicy,
    /// Z-score the numeric block with training-split statistics.
    #[serde(default)]
    pub standardize: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preprocess {
    /// Keep only rows whose categorical `column` equals `equals`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<Filter>,
    /// Numeric columns replaced by equal-frequency bin names.
    #[serde(default)]
    pub categorize: Vec<Categorize>,
    #[serde(default)]
    pub undersample: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Filter {
    pub column: String,
    pub equals: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Categorize {
    pub column: String,
    pub bins: usize,
}

/// How the class label is computed from the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LabelSpec {
    /// `matched_class` where `column == value`, the other class elsewhere.
    Match {
        column: String,
        value: String,
        #[serde(default = "one")]
        matched_class: usize,
    },
    /// 1 where `column > threshold`, else 0.
    Threshold { column: String, threshold: f64 },
    /// Equal-frequency bin index of `column`.
    Bins { column: String, bins: usize },
    /// A numeric column that already holds class ids.
    Column { column: String },
}

impl LabelSpec {
    pub fn source_column(&self) -> &str {
        match self {
            LabelSpec::Match { column, .. }
            | LabelSpec::Threshold { column, .. }
            | LabelSpec::Bins { column, .. }
            | LabelSpec::Column { column } => column,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    #[serde(default = "default_ratio")]
    pub ratio: f64,
}

fn default_ratio() -> f64 {
    0.7
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            ratio: default_ratio(),
        }
    }
}

/// Network shape and training schedule. The input and output widths follow
/// from the data; when given here they are checked against it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<usize>,
    pub hidden: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default = "crate::mlp::MlpConfig::default_learning_rate")]
    pub learning_rate: f64,
}

impl MlpSection {
    /// `[input, hidden.., output]` for the widths the data actually produced.
    pub fn layer_sizes(&self, input: usize, output: usize) -> Result<Vec<usize>> {
        if let Some(declared) = self.input.filter(|&d| d != input) {
            return Err(Error::Config(format!(
                "mlp.input is {declared} but the cascaded features are {input} wide"
            )));
        }
        if let Some(declared) = self.output.filter(|&d| d != output) {
            return Err(Error::Config(format!(
                "mlp.output is {declared} but the labels have {output} classes"
            )));
        }
        let mut sizes = vec![input];
        sizes.extend(&self.hidden);
        sizes.push(output);
        Ok(sizes)
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Read a config file. A relative CSV path is taken relative to the file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let (DataSource::Csv { path: data, .. }, Some(dir)) = (&mut config.data, path.parent()) {
            if data.is_relative() {
                *data = dir.join(&*data);
            }
        }
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.seeds.is_empty() {
            return fail("at least one seed is required".into());
        }
        if self.partitions == 0 {
            return fail("partitions must be at least 1".into());
        }
        let f = &self.features;
        if f.categorical.is_empty() && f.numeric.is_empty() && !f.all_numeric {
            return fail("no feature columns selected".into());
        }
        if f.all_numeric && !f.numeric.is_empty() {
            return fail("features.numeric and features.all_numeric are exclusive".into());
        }
        if !(self.split.ratio > 0.0 && self.split.ratio < 1.0) {
            return fail(format!("split ratio {} is not in (0, 1)", self.split.ratio));
        }
        self.cascade.validate()?;
        for source in label_sources_of(self) {
            let used = self
                .features
                .categorical
                .iter()
                .chain(&self.features.numeric)
                .any(|f| f == source);
            if used {
                return fail(format!(
                    "`{source}` defines a label and cannot also be a feature"
                ));
            }
        }
        if let Some(schema) = self.data.csv_schema()? {
            let names: Vec<&str> = schema.columns.iter().map(|c| c.name.as_str()).collect();
            let wanted = self
                .features
                .categorical
                .iter()
                .chain(&self.features.numeric)
                .map(String::as_str)
                .chain(label_sources_of(self));
            for name in wanted {
                if !names.contains(&name) {
                    return fail(format!("column `{name}` is not declared in data.columns"));
                }
            }
        }
        if self.mlp.hidden.is_empty() || self.mlp.hidden.contains(&0) {
            return fail("mlp.hidden needs at least one layer, all sizes >= 1".into());
        }
        if self.mlp.batch_size == 0 || !(self.mlp.learning_rate > 0.0) {
            return fail("mlp needs batch_size >= 1 and learning_rate > 0".into());
        }
        Ok(())
    }
}

fn label_sources_of(config: &ExperimentConfig) -> impl Iterator<Item = &str> {
    std::iter::once(config.label.source_column())
        .chain(config.stage3_label.as_ref().map(LabelSpec::source_column))
}
