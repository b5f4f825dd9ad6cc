use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong between reading a CSV and writing a report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ingest error: {0}")]
    Ingest(String),

    #[error("ingest error at data row {row}, column `{column}`: {message}")]
    IngestCell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("imputation error: {0}")]
    Impute(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("resample error: {0}")]
    Resample(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("binning error: {0}")]
    Bin(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("unseen category `{category}` in column `{column}`")]
    UnseenCategory { column: String, category: String },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("training diverged at epoch {epoch}: {message}; try lowering the learning rate")]
    Divergence { epoch: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("partition error: {0}")]
    Partition(String),

    #[error("partition {index} failed: {source}")]
    PartitionTask {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("metric error: {0}")]
    Metric(String),

    #[error("document error: {0}")]
    Document(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An error raised inside one step of an experiment run, tagged with that step.
    #[error("[{stage}] {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// The innermost error, with stage and partition tags peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::PartitionTask { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Attach a stage tag to errors coming out of one step of the experiment runner.
pub(crate) trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
