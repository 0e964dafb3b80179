use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the pipeline, from file parsing up to learning.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: expected {expected} fields, found {found}")]
    CsvRaggedRow {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}:{line}: column {column}: not a number: {text:?}")]
    CsvBadNumber {
        path: PathBuf,
        line: usize,
        column: usize,
        text: String,
    },

    #[error("{path}: no data rows")]
    CsvNoData { path: PathBuf },

    #[error("{path}: bad IDX magic {found:#010x}")]
    IdxBadMagic { path: PathBuf, found: u32 },

    #[error("{path}: unsupported IDX element type {dtype:#04x} (only unsigned byte 0x08)")]
    IdxUnsupportedType { path: PathBuf, dtype: u8 },

    #[error("{path}: IDX payload holds {found} bytes but dimensions imply {expected}")]
    IdxSizeMismatch {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("IDX files disagree: {images} images vs {labels} labels")]
    IdxCountMismatch { images: usize, labels: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("column {column} is constant; cannot normalize to unit length")]
    ConstantColumn { column: usize },

    #[error("invalid argument {name}: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dictionary column {index} has zero norm")]
    ZeroNormAtom { index: usize },

    #[error("path solver made no progress after {iterations} events")]
    SolverStalled { iterations: usize },

    #[error("solving coefficient column {column}: {source}")]
    ColumnSolve {
        column: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("vertex {vertex} is isolated: all incident coefficients are zero")]
    IsolatedVertex { vertex: usize },

    #[error("vertices with zero degree: {vertices:?}")]
    ZeroVertexDegree { vertices: Vec<usize> },

    #[error("hyperedge {index} is invalid: {reason}")]
    InvalidHyperedge { index: usize, reason: String },

    #[error("matrix is not symmetric (max |A - A^T| = {max_asymmetry:.3e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("alpha must lie strictly in (0, 1), got {alpha}")]
    AlphaOutOfRange { alpha: f64 },

    #[error("label matrix contains no labeled samples")]
    NoLabeledSamples,

    #[error("iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("label vectors have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("evaluation mask selects no samples")]
    EmptyMask,
}
