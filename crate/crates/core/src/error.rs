use thiserror::Error;

/// Errors produced by model construction, evaluation and the measurement routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OomError {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("shape mismatch in `{field}`: expected {expected}, got {found}")]
    Shape {
        field: String,
        expected: String,
        found: String,
    },

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("symbol index {index} out of range for alphabet of size {size}")]
    SymbolIndex { index: usize, size: usize },

    #[error("word {word:?} has probability {value:e}, below the negativity tolerance -{tol:e}")]
    NegativeProbability {
        word: Vec<usize>,
        value: f64,
        tol: f64,
    },

    #[error("{what}: {requested} exceeds the limit of {limit}")]
    Resource {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("algebra mismatch: expected blocks {expected:?}, found {found:?}")]
    AlgebraMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("mixture weights must be positive and sum to 1 (sum = {sum})")]
    WeightSum { sum: f64 },

    #[error("did not stabilize within depth {depth}")]
    NotStabilized { depth: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("causal state partition is empty")]
    EmptyPartition,
}

pub type Result<T, E = OomError> = std::result::Result<T, E>;
