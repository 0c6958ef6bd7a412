//! Problem types and the type graph.
//!
//! Each [`ProblemType`] is a structural template with named coefficient
//! slots. [`Shape`] is a classified equation: its type plus the signed slot
//! values, read off the surface structure. Slots that follow a `+`/`-` hold
//! the *effective* signed value, so `3 - 4` and `3 + -4` both carry `-4`.
//!
//! | type | template                 | slots           |
//! |------|--------------------------|-----------------|
//! | T1   | `Ax = B`                 | a b             |
//! | T2   | `Ax = B + C`             | a b c           |
//! | T3   | `Ax = B * C`             | a b c           |
//! | T4   | `Ax + Bx = C`            | a b c           |
//! | T5   | `Ax + B = C`             | a b c           |
//! | T6   | `A + Bx = C`             | a b c           |
//! | T7   | `Ax = Bx + C`            | a b c           |
//! | T8   | `Ax = B(C * D)`          | a b c d         |
//! | T9   | `Ax = B(Cx + D)`         | a b c d         |
//! | T10  | `Ax = B + C * D`         | a b c d         |
//! | T11  | `A + Bx + Cx = D`        | a b c d         |
//! | T12  | `Ax = B + C(Dx + E)`     | a b c d e       |
//! | T14  | `Ax + B = Cx + D`        | a b c d         |
//! | T15  | `Ax + Bx = C + D`        | a b c d         |
//! | T16  | `Ax = Bx + C + D`        | a b c d         |
//!
//! There is no T13.

use std::fmt;
use std::str::FromStr;

use petgraph::algo::{has_path_connecting, toposort};
use petgraph::graphmap::DiGraphMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Equation, Expr};
use crate::rational::Rational;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum ProblemType {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
    T9,
    T10,
    T11,
    T12,
    T14,
    T15,
    T16,
}

impl ProblemType {
    pub const ALL: [ProblemType; 15] = [
        ProblemType::T1,
        ProblemType::T2,
        ProblemType::T3,
        ProblemType::T4,
        ProblemType::T5,
        ProblemType::T6,
        ProblemType::T7,
        ProblemType::T8,
        ProblemType::T9,
        ProblemType::T10,
        ProblemType::T11,
        ProblemType::T12,
        ProblemType::T14,
        ProblemType::T15,
        ProblemType::T16,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ProblemType::T1 => "T1",
            ProblemType::T2 => "T2",
            ProblemType::T3 => "T3",
            ProblemType::T4 => "T4",
            ProblemType::T5 => "T5",
            ProblemType::T6 => "T6",
            ProblemType::T7 => "T7",
            ProblemType::T8 => "T8",
            ProblemType::T9 => "T9",
            ProblemType::T10 => "T10",
            ProblemType::T11 => "T11",
            ProblemType::T12 => "T12",
            ProblemType::T14 => "T14",
            ProblemType::T15 => "T15",
            ProblemType::T16 => "T16",
        }
    }

    pub fn template(self) -> &'static str {
        match self {
            ProblemType::T1 => "Ax = B",
            ProblemType::T2 => "Ax = B + C",
            ProblemType::T3 => "Ax = B * C",
            ProblemType::T4 => "Ax + Bx = C",
            ProblemType::T5 => "Ax + B = C",
            ProblemType::T6 => "A + Bx = C",
            ProblemType::T7 => "Ax = Bx + C",
            ProblemType::T8 => "Ax = B(C * D)",
            ProblemType::T9 => "Ax = B(Cx + D)",
            ProblemType::T10 => "Ax = B + C * D",
            ProblemType::T11 => "A + Bx + Cx = D",
            ProblemType::T12 => "Ax = B + C(Dx + E)",
            ProblemType::T14 => "Ax + B = Cx + D",
            ProblemType::T15 => "Ax + Bx = C + D",
            ProblemType::T16 => "Ax = Bx + C + D",
        }
    }

    /// Number of coefficient slots in the template.
    pub fn arity(self) -> usize {
        match self {
            ProblemType::T1 => 2,
            ProblemType::T2
            | ProblemType::T3
            | ProblemType::T4
            | ProblemType::T5
            | ProblemType::T6
            | ProblemType::T7 => 3,
            ProblemType::T12 => 5,
            _ => 4,
        }
    }
}

impl fmt::Display for ProblemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ProblemType {
    type Err = String;

    fn from_str(s: &str) -> Result<ProblemType, String> {
        ProblemType::ALL
            .into_iter()
            .find(|t| t.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown problem type `{s}`"))
    }
}

/// A classified equation: its type and signed slot values (see module docs).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Shape {
    pub ty: ProblemType,
    pub slots: Vec<Rational>,
}

fn constant(e: &Expr) -> Option<Rational> {
    match e {
        Expr::Constant(c) => Some(c.clone()),
        _ => None,
    }
}

/// Coefficient of a lone x-term: `3x`, `x`, `-x` or `3 * x`.
fn x_term(e: &Expr) -> Option<Rational> {
    match e {
        Expr::ScaledVariable(k) => Some(k.clone()),
        Expr::Variable => Some(Rational::one()),
        Expr::Negation(inner) if **inner == Expr::Variable => Some(-Rational::one()),
        Expr::Product(l, r) if **r == Expr::Variable => constant(l),
        _ => None,
    }
}

/// Splits `l + r` / `l - r` into the left operand, the sign applied to the
/// right operand, and the right operand.
fn additive(e: &Expr) -> Option<(&Expr, bool, &Expr)> {
    match e {
        Expr::Sum(l, r) => Some((l, false, r)),
        Expr::Difference(l, r) => Some((l, true, r)),
        _ => None,
    }
}

fn signed(negated: bool, value: Rational) -> Rational {
    if negated {
        -value
    } else {
        value
    }
}

fn product(e: &Expr) -> Option<(&Expr, &Expr)> {
    match e {
        Expr::Product(l, r) => Some((l, r)),
        _ => None,
    }
}

fn parenthesized(e: &Expr) -> Option<&Expr> {
    match e {
        Expr::Parenthesized(inner) => Some(inner),
        _ => None,
    }
}

/// `l op term`, where the right operand is read by `read` and signed.
fn signed_tail(
    e: &Expr,
    read: impl Fn(&Expr) -> Option<Rational>,
) -> Option<(&Expr, Rational)> {
    let (l, negated, r) = additive(e)?;
    Some((l, signed(negated, read(r)?)))
}

/// `C * D` with both factors constant.
fn constant_product(e: &Expr) -> Option<(Rational, Rational)> {
    let (l, r) = product(e)?;
    Some((constant(l)?, constant(r)?))
}

/// `Cx + D` (inside parentheses for T9/T12).
fn linear_binomial(e: &Expr) -> Option<(Rational, Rational)> {
    let (l, d) = signed_tail(e, constant)?;
    Some((x_term(l)?, d))
}

fn classify_rhs_of_x_term(a: Rational, rhs: &Expr) -> Option<Shape> {
    let shape = |ty, mut rest: Vec<Rational>| {
        rest.insert(0, a.clone());
        Some(Shape { ty, slots: rest })
    };
    if let Some(b) = constant(rhs) {
        return shape(ProblemType::T1, vec![b]);
    }
    if let Some(b) = x_term(rhs) {
        // `Ax = Bx` is T7 with a zero constant.
        return shape(ProblemType::T7, vec![b, Rational::zero()]);
    }
    if let Some((b, c)) = constant_product(rhs) {
        return shape(ProblemType::T3, vec![b, c]);
    }
    if let Some((l, r)) = product(rhs) {
        let b = constant(l)?;
        let inner = parenthesized(r)?;
        if let Some((c, d)) = constant_product(inner) {
            return shape(ProblemType::T8, vec![b, c, d]);
        }
        let (c, d) = linear_binomial(inner)?;
        return shape(ProblemType::T9, vec![b, c, d]);
    }
    let (l, negated, r) = additive(rhs)?;
    if let Some(b) = constant(l) {
        if let Some(c) = constant(r) {
            return shape(ProblemType::T2, vec![b, signed(negated, c)]);
        }
        if let Some((c, d)) = constant_product(r) {
            return shape(ProblemType::T10, vec![b, signed(negated, c), d]);
        }
        let (c, group) = product(r)?;
        let c = signed(negated, constant(c)?);
        let (d, e) = linear_binomial(parenthesized(group)?)?;
        return shape(ProblemType::T12, vec![b, c, d, e]);
    }
    if let Some(b) = x_term(l) {
        let c = signed(negated, constant(r)?);
        return shape(ProblemType::T7, vec![b, c]);
    }
    let (inner, c) = signed_tail(l, constant)?;
    let b = x_term(inner)?;
    let d = signed(negated, constant(r)?);
    shape(ProblemType::T16, vec![b, c, d])
}

impl Shape {
    pub fn new(ty: ProblemType, slots: Vec<Rational>) -> Shape {
        assert_eq!(slots.len(), ty.arity(), "{ty} takes {} slots", ty.arity());
        Shape { ty, slots }
    }

    /// Reads an equation against the 15 templates.
    pub fn of(e: &Equation) -> Result<Shape> {
        Shape::match_templates(e).ok_or_else(|| Error::Unclassifiable(e.to_string()))
    }

    fn match_templates(e: &Equation) -> Option<Shape> {
        if let Some(a) = x_term(&e.lhs) {
            return classify_rhs_of_x_term(a, &e.rhs);
        }
        let (l, negated, r) = additive(&e.lhs)?;
        let shape = |ty, slots| Some(Shape { ty, slots });
        if let Some(a) = x_term(l) {
            if let Some(b) = x_term(r) {
                let b = signed(negated, b);
                if let Some(c) = constant(&e.rhs) {
                    return shape(ProblemType::T4, vec![a, b, c]);
                }
                let (c, d) = signed_tail(&e.rhs, constant)?;
                return shape(ProblemType::T15, vec![a, b, constant(c)?, d]);
            }
            let b = signed(negated, constant(r)?);
            if let Some(c) = constant(&e.rhs) {
                return shape(ProblemType::T5, vec![a, b, c]);
            }
            let (c, d) = linear_binomial(&e.rhs)?;
            return shape(ProblemType::T14, vec![a, b, c, d]);
        }
        if let Some(a) = constant(l) {
            let b = signed(negated, x_term(r)?);
            return shape(ProblemType::T6, vec![a, b, constant(&e.rhs)?]);
        }
        let (inner, b) = signed_tail(l, x_term)?;
        let a = constant(inner)?;
        let c = signed(negated, x_term(r)?);
        shape(ProblemType::T11, vec![a, b, c, constant(&e.rhs)?])
    }

    /// Canonical rendering: a negative slot after an operator is written as
    /// a subtraction of its magnitude.
    pub fn to_equation(&self) -> Equation {
        let s = &self.slots;
        let k = |v: &Rational| Expr::Constant(v.clone());
        let xv = |v: &Rational| Expr::ScaledVariable(v.clone());
        match self.ty {
            ProblemType::T1 => Equation::new(xv(&s[0]), k(&s[1])),
            ProblemType::T2 => Equation::new(xv(&s[0]), then(k(&s[1]), &s[2], k)),
            ProblemType::T3 => Equation::new(xv(&s[0]), Expr::product(k(&s[1]), k(&s[2]))),
            ProblemType::T4 => Equation::new(then(xv(&s[0]), &s[1], xv), k(&s[2])),
            ProblemType::T5 => Equation::new(then(xv(&s[0]), &s[1], k), k(&s[2])),
            ProblemType::T6 => Equation::new(then(k(&s[0]), &s[1], xv), k(&s[2])),
            ProblemType::T7 if s[2].is_zero() => Equation::new(xv(&s[0]), xv(&s[1])),
            ProblemType::T7 => Equation::new(xv(&s[0]), then(xv(&s[1]), &s[2], k)),
            ProblemType::T8 => Equation::new(
                xv(&s[0]),
                Expr::product(k(&s[1]), Expr::parens(Expr::product(k(&s[2]), k(&s[3])))),
            ),
            ProblemType::T9 => Equation::new(
                xv(&s[0]),
                Expr::product(k(&s[1]), Expr::parens(then(xv(&s[2]), &s[3], k))),
            ),
            ProblemType::T10 => Equation::new(
                xv(&s[0]),
                then(k(&s[1]), &s[2], |c| Expr::product(k(c), k(&s[3]))),
            ),
            ProblemType::T11 => Equation::new(
                then(then(k(&s[0]), &s[1], xv), &s[2], xv),
                k(&s[3]),
            ),
            ProblemType::T12 => Equation::new(
                xv(&s[0]),
                then(k(&s[1]), &s[2], |c| {
                    Expr::product(k(c), Expr::parens(then(xv(&s[3]), &s[4], k)))
                }),
            ),
            ProblemType::T14 => Equation::new(
                then(xv(&s[0]), &s[1], k),
                then(xv(&s[2]), &s[3], k),
            ),
            ProblemType::T15 => Equation::new(
                then(xv(&s[0]), &s[1], xv),
                then(k(&s[2]), &s[3], k),
            ),
            ProblemType::T16 => Equation::new(
                xv(&s[0]),
                then(then(xv(&s[1]), &s[2], k), &s[3], k),
            ),
        }
    }
}

/// `acc + term(v)` for non-negative `v`, `acc - term(|v|)` otherwise.
fn then(acc: Expr, v: &Rational, term: impl FnOnce(&Rational) -> Expr) -> Expr {
    if v.is_negative() {
        Expr::difference(acc, term(&v.abs()))
    } else {
        Expr::sum(acc, term(v))
    }
}

pub fn classify(e: &Equation) -> Result<ProblemType> {
    Shape::of(e).map(|s| s.ty)
}

/// Labels of correct edges. The same label may leave several types.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum RuleId {
    FoldSum,
    FoldProduct,
    CombineXTerms,
    SubtractConstant,
    SubtractXTerm,
    Distribute,
    MoveConstant,
    MoveXTerm,
}

impl RuleId {
    pub const ALL: [RuleId; 8] = [
        RuleId::FoldSum,
        RuleId::FoldProduct,
        RuleId::CombineXTerms,
        RuleId::SubtractConstant,
        RuleId::SubtractXTerm,
        RuleId::Distribute,
        RuleId::MoveConstant,
        RuleId::MoveXTerm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::FoldSum => "fold-sum",
            RuleId::FoldProduct => "fold-product",
            RuleId::CombineXTerms => "combine-x-terms",
            RuleId::SubtractConstant => "subtract-constant",
            RuleId::SubtractXTerm => "subtract-Bx",
            RuleId::Distribute => "distribute",
            RuleId::MoveConstant => "move-constant",
            RuleId::MoveXTerm => "move-x-term",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RuleId {
    type Err = String;

    fn from_str(s: &str) -> Result<RuleId, String> {
        RuleId::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown rule `{s}`"))
    }
}

/// The correct-edge set, in canonical order: for each source the first edge
/// listed is the default one.
pub const CORRECT_EDGES: &[(ProblemType, ProblemType, RuleId)] = {
    use ProblemType::*;
    &[
        (T2, T1, RuleId::FoldSum),
        (T3, T1, RuleId::FoldProduct),
        (T4, T1, RuleId::CombineXTerms),
        (T5, T1, RuleId::SubtractConstant),
        (T6, T1, RuleId::SubtractConstant),
        (T7, T1, RuleId::SubtractXTerm),
        (T8, T3, RuleId::FoldProduct),
        (T9, T7, RuleId::Distribute),
        (T10, T2, RuleId::FoldProduct),
        (T11, T6, RuleId::CombineXTerms),
        (T12, T16, RuleId::Distribute),
        (T14, T7, RuleId::MoveConstant),
        (T14, T5, RuleId::MoveXTerm),
        (T15, T4, RuleId::FoldSum),
        (T15, T2, RuleId::CombineXTerms),
        (T16, T7, RuleId::FoldSum),
        (T16, T2, RuleId::SubtractXTerm),
    ]
};

pub fn correct_successors(t: ProblemType) -> Vec<(ProblemType, RuleId)> {
    CORRECT_EDGES
        .iter()
        .filter(|(source, _, _)| *source == t)
        .map(|&(_, target, rule)| (target, rule))
        .collect()
}

/// `G = (V, E_C ∪ E_M)`. Misconception edges have computed targets, so only
/// their sources are stored.
pub struct TypeGraph {
    correct: DiGraphMap<ProblemType, RuleId>,
    misconceptions: Vec<(ProblemType, crate::malrules::MisconceptionId)>,
}

impl Default for TypeGraph {
    fn default() -> Self {
        TypeGraph::new()
    }
}

impl TypeGraph {
    pub fn new() -> TypeGraph {
        let mut correct = DiGraphMap::new();
        for t in ProblemType::ALL {
            correct.add_node(t);
        }
        for &(source, target, rule) in CORRECT_EDGES {
            correct.add_edge(source, target, rule);
        }
        let misconceptions = crate::malrules::catalog()
            .iter()
            .flat_map(|m| m.applicable_types.iter().map(move |&t| (t, m.id)))
            .collect();
        TypeGraph {
            correct,
            misconceptions,
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = ProblemType> + '_ {
        self.correct.nodes()
    }

    pub fn correct_successors(&self, t: ProblemType) -> Vec<(ProblemType, RuleId)> {
        correct_successors(t)
    }

    pub fn misconception_edges(&self) -> &[(ProblemType, crate::malrules::MisconceptionId)] {
        &self.misconceptions
    }

    pub fn path_exists_to_t1(&self, t: ProblemType) -> bool {
        has_path_connecting(&self.correct, t, ProblemType::T1, None)
    }

    /// Topological order of the correct-edge subgraph, or `None` on a cycle.
    pub fn topological_order(&self) -> Option<Vec<ProblemType>> {
        toposort(&self.correct, None).ok()
    }

    /// One record per edge, for machine consumption.
    pub fn edge_records(&self) -> Vec<EdgeRecord> {
        let mut records: Vec<EdgeRecord> = CORRECT_EDGES
            .iter()
            .map(|(source, target, rule)| EdgeRecord {
                source: source.label().to_string(),
                target: target.label().to_string(),
                kind: "correct".to_string(),
                id: rule.as_str().to_string(),
            })
            .collect();
        records.extend(self.misconceptions.iter().map(|(source, id)| EdgeRecord {
            source: source.label().to_string(),
            target: "computed".to_string(),
            kind: "misconception".to_string(),
            id: id.as_str().to_string(),
        }));
        records
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub source: String,
    pub target: String,
    pub kind: String,
    pub id: String,
}
