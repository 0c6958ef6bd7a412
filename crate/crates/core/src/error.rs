use thiserror::Error;

use crate::malrules::MisconceptionId;
use crate::taxonomy::ProblemType;

/// Failure to read an equation from text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("unknown variable `{symbol}` at position {position}: only `x` may appear")]
    MultipleVariables { symbol: char, position: usize },
    #[error("equation is not linear in x")]
    Nonlinear,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal `{0}`")]
pub struct ParseRationalError(pub String);

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("`{0}` does not match any problem type")]
    Unclassifiable(String),
    #[error("`{equation}` is {found}, not {expected}")]
    TypeMismatch {
        equation: String,
        expected: ProblemType,
        found: ProblemType,
    },
    #[error("rule `{rule}` is not a correct edge out of {ty}")]
    RuleNotApplicable { rule: String, ty: ProblemType },
    #[error("`{0}` has a zero x-coefficient and cannot be solved")]
    ZeroCoefficient(String),
    #[error("`{0}` has no unique solution")]
    NoUniqueSolution(String),
    #[error("{id} does not apply to `{equation}`")]
    MisconceptionNotApplicable { id: MisconceptionId, equation: String },
    #[error("{id} rewrote `{equation}` into a form outside the taxonomy")]
    UnclassifiableResult { id: MisconceptionId, equation: String },
    #[error("reduction did not terminate within {0} steps")]
    NonTermination(usize),
    #[error("solution tree exceeded the budget of {0} nodes")]
    BudgetExceeded(usize),
    #[error("no acceptable {ty} instance after {tries} draws")]
    Exhausted { ty: ProblemType, tries: usize },
    #[error("invalid ratio {0}: expected one of 0, 0.25, 0.5, 1.0")]
    InvalidRatio(f64),
    #[error("invalid coefficient range [{0}, {1}]")]
    InvalidRange(i64, i64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by malformed input documents rather than by the algebra.
    pub fn is_schema(&self) -> bool {
        matches!(self, Error::Schema { .. } | Error::Json(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
