//! Tabular records: schema, CSV ingestion, cleaning, encoding and splitting.
//!
//! A [`Dataset`] is a schema plus rows of [`Cell`]s with explicit
//! [`Cell::Missing`]. Cleaning operations return new datasets together with a
//! record of what they changed so the pipeline can log every action.

mod clean;
mod csvio;
mod dataset;
mod encode;
mod schema;
mod split;

use std::path::Path;

use thiserror::Error;

pub use clean::{deduplicate, impute, merge_sources, Deduplicated, Imputation, Imputed, JoinMode};
pub use csvio::{parse_csv, read_csv_file, write_csv, write_csv_file};
pub use dataset::{Cell, Dataset, Row};
pub use encode::{
    apply_encoding, encode, encode_with, plan_from_names, DesignMatrix, EncodeOptions,
    FeatureEncoding, Scaling,
};
pub use schema::{Column, ColumnKind, Schema};
pub use split::split;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TabularError {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("header does not match schema (missing: {missing:?}, unexpected: {unexpected:?})")]
    HeaderMismatch { missing: Vec<String>, unexpected: Vec<String> },
    #[error("line {line}: row has {found} cells, expected {expected}")]
    RowArityMismatch { line: u64, found: usize, expected: usize },
    #[error("line {line}: cannot parse `{value}` for column `{column}`")]
    UnparseableValue { line: u64, column: String, value: String },
    #[error("row {row}: {reason}")]
    InvalidRow { row: usize, reason: String },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{column}` is {found}, expected {expected}")]
    WrongColumnKind { column: String, expected: ColumnKind, found: ColumnKind },
    #[error("merge conflict on keys {0:?}")]
    MergeConflict(Vec<String>),
    #[error("column `{0}` has no observed values")]
    AllMissingColumn(String),
    #[error("row {row}: missing value in column `{column}`")]
    MissingValue { row: usize, column: String },
    #[error("missing features: {0:?}")]
    MissingFeatures(Vec<String>),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("{0}")]
    InvalidArgument(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(String),
    #[error("{file}: {source}")]
    InFile { file: String, source: Box<TabularError> },
}

impl TabularError {
    pub(crate) fn in_file(self, path: &Path) -> TabularError {
        TabularError::InFile { file: path.display().to_string(), source: Box::new(self) }
    }
}
