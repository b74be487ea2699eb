use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("digit {digit} out of range for branching m={m}")]
    DigitOutOfRange { digit: u32, m: usize },

    #[error("branching must be at least 2, got {0}")]
    BadBranching(usize),

    #[error("tree with m={m}, depth={depth} has {count} vertices, exceeding the budget of {budget}")]
    VertexBudget {
        m: usize,
        depth: usize,
        count: u128,
        budget: usize,
    },

    #[error("operator arity {arity} does not match expected length {expected}")]
    ArityMismatch { arity: usize, expected: usize },

    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("parameter {name} = {value} outside {range}")]
    ParamDomain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("non-finite value at vertex \"{vertex}\" (rank {rank}) on step {step}")]
    NumericalFailure {
        vertex: String,
        rank: usize,
        step: usize,
    },

    #[error("Picard iteration did not reach tol {tol} within {max_iter} iterations (last distance {last})")]
    IterationLimit {
        tol: f64,
        max_iter: usize,
        last: f64,
        trace: Vec<f64>,
    },

    #[error("exact polynomial propagation is only available for the arithmetic mean")]
    UnsupportedOperator,

    #[error("datum support level a(f)={support} exceeds tree depth {depth}")]
    SupportExceedsDepth { support: usize, depth: usize },

    #[error("vertex at level {level} has no stored successors (truncation depth {depth})")]
    TruncationBoundary { level: usize, depth: usize },

    #[error("subfactorial overflows i64 at n={0}")]
    SubfactorialOverflow(u32),

    #[error("cannot parse vertex path \"{0}\"")]
    BadPath(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
