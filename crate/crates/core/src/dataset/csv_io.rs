use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Column, ColumnData, ColumnKind, ColumnarTable};
use crate::error::{Error, Result};

/// Cell text that marks a missing value (the UCI convention).
pub const MISSING_TOKEN: &str = "?";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDecl {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnDecl {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        ColumnDecl {
            name: name.into(),
            kind,
        }
    }
}

/// What a CSV file is expected to contain.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub columns: Vec<ColumnDecl>,
    /// When false the file has no header row and columns are taken positionally.
    pub has_header: bool,
    pub missing_tokens: Vec<String>,
    pub label: Option<String>,
}

impl CsvSchema {
    pub fn new(columns: Vec<ColumnDecl>) -> Self {
        CsvSchema {
            columns,
            has_header: true,
            missing_tokens: vec![MISSING_TOKEN.to_owned()],
            label: None,
        }
    }

    pub fn headerless(mut self) -> Self {
        self.has_header = false;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

/// Read a comma-delimited UTF-8 file into a table, checking it against `schema`.
///
/// Missing-value tokens become missing cells; every other numeric cell must
/// parse as a finite number.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<ColumnarTable> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::Ingest(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .trim(csv::Trim::All)
        .from_reader(file);

    if schema.has_header {
        let header = reader
            .headers()
            .map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?;
        let found: Vec<&str> = header.iter().collect();
        let expected: Vec<&str> = schema.columns.iter().map(|c| c.name.as_str()).collect();
        if found != expected {
            return Err(Error::Ingest(format!(
                "{}: header {:?} does not match declared columns {:?}",
                path.display(),
                found,
                expected
            )));
        }
    }

    let mut data: Vec<ColumnData> = schema
        .columns
        .iter()
        .map(|c| match c.kind {
            ColumnKind::Categorical => ColumnData::Categorical(Vec::new()),
            ColumnKind::Numeric => ColumnData::Numeric(Vec::new()),
        })
        .collect();

    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?;
        if record.len() != schema.columns.len() {
            return Err(Error::IngestCell {
                row: row + 1,
                column: String::new(),
                message: format!("{} fields, expected {}", record.len(), schema.columns.len()),
            });
        }
        for ((cell, decl), store) in record.iter().zip(&schema.columns).zip(&mut data) {
            let missing = schema.missing_tokens.iter().any(|t| t == cell);
            match store {
                ColumnData::Categorical(v) => v.push((!missing).then(|| cell.to_owned())),
                ColumnData::Numeric(v) => {
                    if missing {
                        v.push(None);
                        continue;
                    }
                    let parsed = cell
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Error::IngestCell {
                            row: row + 1,
                            column: decl.name.clone(),
                            message: format!("`{cell}` is not a finite number"),
                        })?;
                    v.push(Some(parsed));
                }
            }
        }
    }

    let columns = schema
        .columns
        .iter()
        .zip(data)
        .map(|(decl, d)| Column::new(decl.name.clone(), d))
        .collect();
    let table = ColumnarTable::new(columns)?;
    match &schema.label {
        Some(label) => table.with_label(label),
        None => Ok(table),
    }
}

/// Write a table with a header row; missing cells are written as `?`.
pub fn write_csv(table: &ColumnarTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_io_error(path, e))?;
    writer
        .write_record(table.column_names())
        .map_err(|e| csv_io_error(path, e))?;
    let mut record: Vec<String> = Vec::with_capacity(table.columns().len());
    for row in 0..table.n_rows() {
        record.clear();
        for column in table.columns() {
            record.push(match column.data() {
                ColumnData::Categorical(v) => {
                    v[row].clone().unwrap_or_else(|| MISSING_TOKEN.to_owned())
                }
                ColumnData::Numeric(v) => {
                    v[row].map_or_else(|| MISSING_TOKEN.to_owned(), |x| x.to_string())
                }
            });
        }
        writer
            .write_record(&record)
            .map_err(|e| csv_io_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn csv_io_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Ingest(format!("{}: {other:?}", path.display())),
    }
}
