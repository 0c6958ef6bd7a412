//! Misconception-aware solving of one-variable linear equations.
//!
//! Equations are classified into fifteen structural problem types. Correct
//! rules move each type toward `Ax = B`; misconceptions are alternative,
//! erroneous edges of the same graph. On top of that the crate enumerates
//! solution spaces, generates seeded datasets and scores transcripts.

pub mod error;
pub mod eval;

pub mod expr;
pub mod forge;

pub mod malrules;
pub mod parser;
pub mod rational;
pub mod space;
pub mod reduction;

pub mod taxonomy;

pub use error::{Error, ParseError, Result};
pub use expr::{Equation, Expr};
pub use malrules::{
    applicable, apply_misconception, catalog, reduce_with_misconceptions, Misconception,
    MisconceptionId, MisconceptionSet,
};
pub use rational::Rational;
pub use reduction::{reduce, reduce_step, solve_terminal, Answer, Edge, Form, ReductionTrace};
pub use taxonomy::{classify, ProblemType, RuleId, Shape, TypeGraph};
