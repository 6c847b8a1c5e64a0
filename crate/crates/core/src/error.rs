//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Result`]. Variants are
//! grouped by subsystem rather than by call site so that callers can match
//! on broad failure classes (I/O, malformed input, shape mismatch, numeric
//! failure) without tracking individual functions.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Underlying file-system or stream failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A NIfTI file (or gzip stream) could not be decoded. The message
    /// identifies the offending field or the corruption that was detected.
    #[error("invalid NIfTI data: {0}")]
    InvalidNifti(String),

    /// A NIfTI volume is structurally valid but unsupported by this crate
    /// (e.g. an exotic datatype or more than three meaningful dimensions).
    #[error("unsupported NIfTI feature: {0}")]
    UnsupportedNifti(String),

    /// A label map holds a voxel code outside the tissue-code vocabulary.
    /// `index` counts voxels x-fastest, matching the on-disk payload order.
    #[error("invalid label code {code} at voxel index {index}")]
    InvalidLabel { code: i64, index: usize },

    /// A dataset directory holds no usable cases.
    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    /// Two arrays that must agree in shape do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An iterative numeric routine could not produce a usable result
    /// (e.g. a mixture fit on an empty or degenerate sample).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A CSV table could not be read at the schema level (missing or
    /// misnamed columns, unreadable file). Cell-level problems are
    /// reported per row instead of through this variant.
    #[error("clinical table error: {0}")]
    ClinicalTable(String),

    /// A serialized report or model could not be parsed, or its schema
    /// version is incompatible with this build.
    #[error("report error: {0}")]
    Report(String),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// CSV (de)serialization failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
