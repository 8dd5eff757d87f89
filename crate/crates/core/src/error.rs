use thiserror::Error;

/// Errors produced by the dsdkit library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DsdError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular at pivot {pivot} (|pivot| = {magnitude:e})")]
    Singular { pivot: usize, magnitude: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("node '{label}' has zero total out-weight")]
    ZeroOutWeight { label: String },

    #[error("duplicate edge '{source_label}' -> '{target_label}'")]
    DuplicateEdge {
        source_label: String,
        target_label: String,
    },

    #[error("operation requires an irreducible chain ({scc_count} strongly connected components)")]
    NotIrreducible { scc_count: usize },

    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },

    #[error("numerical tolerance breached: {0}")]
    Tolerance(String),
}

impl DsdError {
    /// True for errors caused by floating-point breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, DsdError::Singular { .. } | DsdError::Tolerance(_))
    }
}

pub type Result<T> = std::result::Result<T, DsdError>;
