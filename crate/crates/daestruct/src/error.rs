use thiserror::Error;

/// Errors raised by the structural-analysis core.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A column of the signature matrix has no finite entry, so the
    /// variable-order mapping is undefined there. Implies structural
    /// singularity.
    #[error("column {0} has no finite entry")]
    EmptyColumn(usize),

    /// The sparsity pattern admits no transversal (no perfect matching).
    #[error("structurally singular: no transversal exists")]
    StructurallySingular,

    #[error("parameter vector has a negative component at index {0}")]
    NegativeParameter(usize),

    #[error("offset vector c has a negative component at index {0}")]
    NegativeOffset(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("not a transversal: {0}")]
    InvalidTransversal(String),

    #[error("invalid block structure: {0}")]
    InvalidBlockStructure(String),

    /// Brute-force reference asked on an instance beyond its size cap.
    #[error("instance too large for brute force: n = {n}, limit {limit}")]
    TooLarge { n: usize, limit: usize },

    /// The fixed-point iteration exceeded its worst-case bound, which can
    /// only happen when the supplied transversal is not highest-value.
    #[error("fixed-point iteration diverged: transversal is not highest-value")]
    NotHighestValue,
}

pub type Result<T> = std::result::Result<T, Error>;
