use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid interval [{a}, {b}]: lower end must be below upper end")]
    InvalidInterval { a: f64, b: f64 },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("tolerance not reached: value {value}, error estimate {error:e} > target {target:e}")]
    ToleranceNotReached { value: f64, error: f64, target: f64 },

    #[error("work budget exceeded: {needed} terms requested, cap is {cap}")]
    BudgetExceeded { needed: u64, cap: u64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("partition rejected: {0}")]
    BelowThreshold(String),

    #[error("empty index set: 2^{j}/{e_j} <= 2")]
    EmptyIndexSet { j: u32, e_j: u64 },

    #[error("missing index {0}")]
    MissingIndex(u64),

    #[error("window [{lo}, {hi}] outside path span [0, {span}]")]
    WindowOutsidePath { lo: f64, hi: f64, span: f64 },

    #[error("too few grid points in window: {0}")]
    TooFewPoints(usize),

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("insufficient sample: {got} < {need}")]
    InsufficientSample { got: usize, need: usize },

    #[error("non-monotone scale function near z = {0}")]
    NonMonotone(f64),

    #[error("io: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error("missing input: {0}")]
    MissingInput(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
