use thiserror::Error;

pub type Result<T> = std::result::Result<T, OtError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OtError {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("shape mismatch: cost matrix is {rows}x{cols}, marginals have lengths {u_len} and {v_len}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        u_len: usize,
        v_len: usize,
    },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("negative value {value} at index {index} in {context}")]
    Negative {
        value: f64,
        index: usize,
        context: &'static str,
    },

    #[error("weights sum to {sum}, which deviates from 1 by more than {tolerance}")]
    WeightSum { sum: f64, tolerance: f64 },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("cosine cost {value} at ({row}, {col}) outside [0, 2]")]
    CosineRange { value: f64, row: usize, col: usize },

    #[error("instance of size {0} is too large for the exhaustive oracle (max 8)")]
    OracleTooLarge(usize),

    #[error("support violation: q[{index}] = {q} but p[{index}] = 0")]
    SupportViolation { index: usize, q: f64 },

    #[error("solver failed: {0}")]
    SolverFailure(String),

    #[error("duplicate token {0:?}")]
    DuplicateToken(String),

    #[error("out-of-vocabulary token {0:?}")]
    OutOfVocabulary(String),

    #[error("unknown-token policy requires an embedding row for {0:?}")]
    MissingUnk(String),
}
