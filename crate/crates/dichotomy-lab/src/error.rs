//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A grid or sample collection that must be nonempty was empty.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Time arguments violate the required ordering (e.g. `t >= s >= 0`).
    #[error("time ordering violated: {context} (t = {t}, s = {s})")]
    TimeOrder {
        context: &'static str,
        t: f64,
        s: f64,
    },

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Expression syntax error, with the byte offset where parsing failed.
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    /// An identifier the expression grammar does not know.
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    /// The restriction of the operator to the complementary subspace could
    /// not be inverted within tolerance.
    #[error("singular restriction at (s, t) = ({s}, {t}): {detail}")]
    SingularRestriction { s: f64, t: f64, detail: String },

    /// Adaptive step control underflowed during integration.
    #[error("integration failure: step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    /// Step budget exhausted before reaching the end of the interval.
    #[error("integration failure: step budget exhausted at t = {t}")]
    StepBudget { t: f64 },

    /// The regression design matrix does not have full column rank.
    #[error("rank-deficient regression: {0}")]
    RankDeficient(String),

    /// System specification file violates the schema or a constraint.
    #[error("spec error at {pointer}: {message}")]
    Spec { pointer: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
