//! Correct single-step reduction down to `T1` and the terminal solve step.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::Equation;
use crate::malrules::MisconceptionId;
use crate::rational::Rational;
use crate::taxonomy::{correct_successors, ProblemType, RuleId, Shape};

/// Longest correct chain is T12 -> T16 -> T7 -> T1, so five is a safe bound.
pub const MAX_CORRECT_STEPS: usize = 5;

/// How an equation sits in the solution graph.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Form {
    Typed(ProblemType),
    /// `x = value`.
    Solved(Rational),
    /// A false statement between constants, e.g. `5 = 7`.
    NoSolution,
    /// A true statement between constants, e.g. `5 = 5`.
    Identity,
}

impl Form {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, Form::Typed(_))
    }

    pub fn answer(&self) -> Option<Answer> {
        match self {
            Form::Typed(_) => None,
            Form::Solved(v) => Some(Answer::Value(v.clone())),
            Form::NoSolution => Some(Answer::NoSolution),
            Form::Identity => Some(Answer::AllValues),
        }
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Form::Typed(t) => write!(f, "{t}"),
            Form::Solved(_) => f.write_str("solved"),
            Form::NoSolution => f.write_str("no-solution"),
            Form::Identity => f.write_str("identity"),
        }
    }
}

/// A final answer, as produced by a trace or written in a transcript.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Answer {
    Value(Rational),
    NoSolution,
    AllValues,
}

impl Answer {
    /// Accepts `-3/2`, `1.5`, `x = -3/2`, `no solution` and `all values`.
    pub fn parse(text: &str) -> Option<Answer> {
        let text = text.trim();
        let body = match text.split_once('=') {
            Some((lhs, rhs)) if lhs.trim() == "x" => rhs.trim(),
            Some(_) => return None,
            None => text,
        };
        let lowered = body.to_ascii_lowercase();
        match lowered.as_str() {
            "no solution" | "none" => Some(Answer::NoSolution),
            "all values" | "all real numbers" | "infinitely many" => Some(Answer::AllValues),
            _ => body.parse().ok().map(Answer::Value),
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Value(v) => write!(f, "{v}"),
            Answer::NoSolution => f.write_str("no solution"),
            Answer::AllValues => f.write_str("all values"),
        }
    }
}

impl Serialize for Answer {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// The edge taken out of a step.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Edge {
    Correct(RuleId),
    /// The correct terminal step `Ax = B -> x = B/A`.
    Solve,
    Misconception(MisconceptionId),
}

impl Edge {
    pub fn misconception(self) -> Option<MisconceptionId> {
        match self {
            Edge::Misconception(id) => Some(id),
            _ => None,
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Edge::Correct(rule) => write!(f, "{rule}"),
            Edge::Solve => f.write_str("solve"),
            Edge::Misconception(id) => write!(f, "{id}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TraceStep {
    pub equation: Equation,
    pub form: Form,
    /// Edge leaving this step; `None` only on the terminal step.
    pub edge: Option<Edge>,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ReductionTrace {
    pub steps: Vec<TraceStep>,
}

impl ReductionTrace {
    pub fn answer(&self) -> Option<Answer> {
        self.steps.last().and_then(|s| s.form.answer())
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.steps.iter().filter_map(|s| s.edge)
    }

    /// Edges that change the equation's type, i.e. everything but a final solve.
    pub fn reduction_steps(&self) -> usize {
        self.edges().filter(|e| matches!(e, Edge::Correct(_))).count()
    }

    pub fn misconceptions(&self) -> Vec<MisconceptionId> {
        self.edges().filter_map(Edge::misconception).collect()
    }

    pub fn equations(&self) -> Vec<String> {
        self.steps.iter().map(|s| s.equation.to_string()).collect()
    }

    pub fn types(&self) -> Vec<ProblemType> {
        self.steps
            .iter()
            .filter_map(|s| match s.form {
                Form::Typed(t) => Some(t),
                _ => None,
            })
            .collect()
    }
}

/// Applies a correct rule to a classified equation. `None` when `rule` does
/// not leave `shape.ty`.
pub fn apply_rule(shape: &Shape, rule: RuleId) -> Option<Shape> {
    use ProblemType::*;
    use RuleId::*;
    let s = &shape.slots;
    let v = |i: usize| s[i].clone();
    let (ty, slots) = match (shape.ty, rule) {
        (T2, FoldSum) => (T1, vec![v(0), &s[1] + &s[2]]),
        (T3, FoldProduct) => (T1, vec![v(0), &s[1] * &s[2]]),
        (T4, CombineXTerms) => (T1, vec![&s[0] + &s[1], v(2)]),
        (T5, SubtractConstant) => (T1, vec![v(0), &s[2] - &s[1]]),
        (T6, SubtractConstant) => (T1, vec![v(1), &s[2] - &s[0]]),
        (T7, SubtractXTerm) => (T1, vec![&s[0] - &s[1], v(2)]),
        (T8, FoldProduct) => (T3, vec![v(0), v(1), &s[2] * &s[3]]),
        (T9, Distribute) => (T7, vec![v(0), &s[1] * &s[2], &s[1] * &s[3]]),
        (T10, FoldProduct) => (T2, vec![v(0), v(1), &s[2] * &s[3]]),
        (T11, CombineXTerms) => (T6, vec![v(0), &s[1] + &s[2], v(3)]),
        (T12, Distribute) => (T16, vec![v(0), &s[2] * &s[3], v(1), &s[2] * &s[4]]),
        (T14, MoveConstant) => (T7, vec![v(0), v(2), &s[3] - &s[1]]),
        (T14, MoveXTerm) => (T5, vec![&s[0] - &s[2], v(1), v(3)]),
        (T15, FoldSum) => (T4, vec![v(0), v(1), &s[2] + &s[3]]),
        (T15, CombineXTerms) => (T2, vec![&s[0] + &s[1], v(2), v(3)]),
        (T16, FoldSum) => (T7, vec![v(0), v(1), &s[2] + &s[3]]),
        (T16, SubtractXTerm) => (T2, vec![&s[0] - &s[1], v(2), v(3)]),
        _ => return None,
    };
    Some(Shape::new(ty, slots))
}

/// Renders a shape and reclassifies the rendering.
pub(crate) fn settle(shape: &Shape) -> Result<(Equation, Shape)> {
    let equation = shape.to_equation();
    let reread = Shape::of(&equation)?;
    Ok((equation, reread))
}

pub fn reduce_step(e: &Equation, t: ProblemType, rule: RuleId) -> Result<(Equation, ProblemType)> {
    let shape = Shape::of(e)?;
    if shape.ty != t {
        return Err(Error::TypeMismatch {
            equation: e.to_string(),
            expected: t,
            found: shape.ty,
        });
    }
    let not_applicable = || Error::RuleNotApplicable {
        rule: rule.to_string(),
        ty: t,
    };
    let target = correct_successors(t)
        .into_iter()
        .find(|&(_, r)| r == rule)
        .map(|(target, _)| target)
        .ok_or_else(not_applicable)?;
    let next = apply_rule(&shape, rule).ok_or_else(not_applicable)?;
    let (equation, reread) = settle(&next)?;
    debug_assert_eq!(reread.ty, target);
    Ok((equation, reread.ty))
}

/// `x = B/A` for a `T1` shape.
pub(crate) fn solve_shape(shape: &Shape, source: &Equation) -> Result<Rational> {
    if shape.ty != ProblemType::T1 {
        return Err(Error::TypeMismatch {
            equation: source.to_string(),
            expected: ProblemType::T1,
            found: shape.ty,
        });
    }
    shape.slots[1]
        .checked_div(&shape.slots[0])
        .ok_or_else(|| Error::ZeroCoefficient(source.to_string()))
}

pub fn solve_terminal(e: &Equation) -> Result<Rational> {
    solve_shape(&Shape::of(e)?, e)
}

/// Follows the default correct edge from every node, then solves.
pub fn reduce(e: &Equation) -> Result<ReductionTrace> {
    let mut trace = ReductionTrace::default();
    let mut equation = e.clone();
    let mut shape = Shape::of(e)?;
    while shape.ty != ProblemType::T1 {
        if trace.steps.len() >= MAX_CORRECT_STEPS {
            return Err(Error::NonTermination(MAX_CORRECT_STEPS));
        }
        let (_, rule) = correct_successors(shape.ty)[0];
        let next = apply_rule(&shape, rule).expect("default edge leaves its source");
        let (next_equation, next_shape) = settle(&next)?;
        trace.steps.push(TraceStep {
            equation,
            form: Form::Typed(shape.ty),
            edge: Some(Edge::Correct(rule)),
        });
        equation = next_equation;
        shape = next_shape;
    }
    let value = solve_shape(&shape, &equation)?;
    trace.steps.push(TraceStep {
        equation,
        form: Form::Typed(ProblemType::T1),
        edge: Some(Edge::Solve),
    });
    trace.steps.push(TraceStep {
        equation: Equation::solved(value.clone()),
        form: Form::Solved(value),
        edge: None,
    });
    Ok(trace)
}
