use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("index ({row}, {col}) out of bounds for {rows}x{cols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("non-finite value encountered")]
    NonFinite,

    #[error("matrix has a negative entry at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize },

    #[error("scaling vector has a nonpositive entry at index {index}")]
    NonpositiveScaling { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not row-column diagonally dominant")]
    NotRcdd,

    #[error("matrix is not symmetric diagonally dominant")]
    NotSdd,

    #[error("matrix is numerically singular")]
    Singular,

    #[error("solver backend missed its tolerance after {iterations} iterations (residual {residual:e})")]
    BackendDiverged { iterations: usize, residual: f64 },

    #[error("inner iteration cap hit in phase {phase}")]
    IterationCapHit { phase: usize },

    #[error("computed scaling failed verification in phase {phase}")]
    ScalingRejected { phase: usize },

    #[error("matrix is not irreducible")]
    NotIrreducible,

    #[error("condition-number guess K exceeded its cap")]
    KCapExceeded,

    #[error("decay factor too large: alpha * rho(A) >= 1")]
    DecayTooLarge,

    #[error("kernel series diverges: lambda * rho(W) >= 1")]
    KernelDiverges,

    #[error("Gram matrix is reducible")]
    ReducibleGram,

    #[error("scaled matrix is not SDD; factor width 2 assumption refuted")]
    NotSddAfterScaling,

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
