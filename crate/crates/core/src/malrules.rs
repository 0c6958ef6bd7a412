//! The misconception catalog and misconception-aware reduction.
//!
//! A misconception *replaces* the correct step at the node where it fires.
//! Rewrites act on slot values and the result is rendered and reclassified,
//! so targets are computed rather than declared. [`BINDINGS`] records, per
//! applicable type, which subterm each rule matches and the form it produces.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::{Equation, Expr};
use crate::rational::Rational;
use crate::reduction::{
    apply_rule, settle, solve_shape, Edge, Form, ReductionTrace, TraceStep,
};
use crate::taxonomy::{correct_successors, ProblemType, Shape};

/// Upper bound on edges in any misconception-aware trace.
pub const MAX_TRACE_STEPS: usize = 12;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum MisconceptionId {
    M1,
    M2S3,
    M3,
    M4,
    M5,
    M6,
    M8,
    M11,
    M12S15,
    M13,
    M14,
    M15,
    M16,
    M17,
    M18,
    M19,
    M20S20,
    M21,
    M22S1,
}

impl MisconceptionId {
    pub const ALL: [MisconceptionId; 19] = [
        MisconceptionId::M1,
        MisconceptionId::M2S3,
        MisconceptionId::M3,
        MisconceptionId::M4,
        MisconceptionId::M5,
        MisconceptionId::M6,
        MisconceptionId::M8,
        MisconceptionId::M11,
        MisconceptionId::M12S15,
        MisconceptionId::M13,
        MisconceptionId::M14,
        MisconceptionId::M15,
        MisconceptionId::M16,
        MisconceptionId::M17,
        MisconceptionId::M18,
        MisconceptionId::M19,
        MisconceptionId::M20S20,
        MisconceptionId::M21,
        MisconceptionId::M22S1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MisconceptionId::M1 => "M1",
            MisconceptionId::M2S3 => "M2_S3",
            MisconceptionId::M3 => "M3",
            MisconceptionId::M4 => "M4",
            MisconceptionId::M5 => "M5",
            MisconceptionId::M6 => "M6",
            MisconceptionId::M8 => "M8",
            MisconceptionId::M11 => "M11",
            MisconceptionId::M12S15 => "M12_S15",
            MisconceptionId::M13 => "M13",
            MisconceptionId::M14 => "M14",
            MisconceptionId::M15 => "M15",
            MisconceptionId::M16 => "M16",
            MisconceptionId::M17 => "M17",
            MisconceptionId::M18 => "M18",
            MisconceptionId::M19 => "M19",
            MisconceptionId::M20S20 => "M20_S20",
            MisconceptionId::M21 => "M21",
            MisconceptionId::M22S1 => "M22_S1",
        }
    }

    /// Position in the catalog; used as the final ranking tie-break.
    pub fn index(self) -> usize {
        MisconceptionId::ALL
            .iter()
            .position(|&m| m == self)
            .expect("every id is in the catalog")
    }

    pub fn info(self) -> &'static Misconception {
        &CATALOG[self.index()]
    }

    /// M19 to M22 replace the solve step and fire only at `T1`.
    pub fn is_solve_step(self) -> bool {
        matches!(
            self,
            MisconceptionId::M19
                | MisconceptionId::M20S20
                | MisconceptionId::M21
                | MisconceptionId::M22S1
        )
    }
}

impl fmt::Display for MisconceptionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MisconceptionId {
    type Err = String;

    /// Case-insensitive; `M2/S3` and `M2_S3` are the same id.
    fn from_str(s: &str) -> Result<MisconceptionId, String> {
        let wanted = s.trim().replace('/', "_");
        MisconceptionId::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(&wanted))
            .ok_or_else(|| format!("unknown misconception `{s}`"))
    }
}

impl Serialize for MisconceptionId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for MisconceptionId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug)]
pub struct Misconception {
    pub id: MisconceptionId,
    pub expression: &'static str,
    pub applicable_types: &'static [ProblemType],
    pub description: &'static str,
}

const ALL_TYPES: &[ProblemType] = &ProblemType::ALL;

static CATALOG: [Misconception; 19] = {
    use MisconceptionId as M;
    use ProblemType::*;
    [
        Misconception {
            id: M::M1,
            expression: "A(part) -> A + (part)",
            applicable_types: &[T8, T9, T10, T12],
            description: "Treating distribution as addition",
        },
        Misconception {
            id: M::M2S3,
            expression: "A(Bx ± C) -> ABx ± C",
            applicable_types: &[T9, T12],
            description: "Ignoring distribution",
        },
        Misconception {
            id: M::M3,
            expression: "A ± B(part) -> (A ± B)(part)",
            applicable_types: &[T10, T12],
            description: "Misapplying parentheses",
        },
        Misconception {
            id: M::M4,
            expression: "A(B*C) -> A*B*A*C",
            applicable_types: &[T8],
            description: "Incorrectly distributing multiplication",
        },
        Misconception {
            id: M::M5,
            expression: "A(Bx ± C) -> A(A*Bx ± A*C)",
            applicable_types: &[T9, T12],
            description: "Over-distribution",
        },
        Misconception {
            id: M::M6,
            expression: "-A(Bx - C) -> -A*Bx - A*C",
            applicable_types: &[T9, T12],
            description: "Incorrect sign distribution",
        },
        Misconception {
            id: M::M8,
            expression: "A(Bx ± C) -> Bx ± A*C",
            applicable_types: &[T9, T12],
            description: "Incorrect distribution on x term",
        },
        Misconception {
            id: M::M11,
            expression: "Ax ± B = Cx ± D -> Ax + Cx = B + D",
            applicable_types: &[T14],
            description: "Incorrectly combining terms",
        },
        Misconception {
            id: M::M12S15,
            expression: "Ax ± B = (A ± B)x",
            applicable_types: &[T5, T6, T7, T9, T12],
            description: "Incorrectly factoring x",
        },
        Misconception {
            id: M::M13,
            expression: "Ax ± B = (A ± B)",
            applicable_types: &[T5, T6, T7, T9, T12],
            description: "Incorrectly factoring x",
        },
        Misconception {
            id: M::M14,
            expression: "part1 + part2 -> part1 - part2",
            applicable_types: &[T2, T4],
            description: "Incorrectly swapping addition and subtraction",
        },
        Misconception {
            id: M::M15,
            expression: "part1 - part2 -> part1 + part2",
            applicable_types: &[T2, T4],
            description: "Incorrectly swapping addition and subtraction",
        },
        Misconception {
            id: M::M16,
            expression: "part1 * part2 -> part1 + part2",
            applicable_types: &[T3, T10],
            description: "Treating multiplication as addition",
        },
        Misconception {
            id: M::M17,
            expression: "A + B -> B - A",
            applicable_types: &[T2, T4],
            description: "Incorrectly swapping order of addition and subtraction",
        },
        Misconception {
            id: M::M18,
            expression: "A - B -> B - A",
            applicable_types: &[T2, T4],
            description: "Incorrectly swapping order of addition and subtraction",
        },
        Misconception {
            id: M::M19,
            expression: "Ax = B -> x = A + B",
            applicable_types: ALL_TYPES,
            description: "Treat division as addition",
        },
        Misconception {
            id: M::M20S20,
            expression: "Ax = B -> x = B",
            applicable_types: ALL_TYPES,
            description: "Divide only on one side",
        },
        Misconception {
            id: M::M21,
            expression: "Ax = B -> x = A - B",
            applicable_types: ALL_TYPES,
            description: "Treat division as subtraction",
        },
        Misconception {
            id: M::M22S1,
            expression: "Ax = B -> x = A/B",
            applicable_types: ALL_TYPES,
            description: "Incorrect numerator and denominator",
        },
    ]
};

pub fn catalog() -> &'static [Misconception] {
    &CATALOG
}

/// Match site and result of every (rule, type) pair that is not a solve-step
/// rule. Slots are signed; `±` follows the sign of the slot it precedes.
pub const BINDINGS: &[(MisconceptionId, ProblemType, &str)] = {
    use MisconceptionId as M;
    use ProblemType::*;
    &[
        (M::M1, T8, "Ax = B(C * D) -> Ax = B + C * D"),
        (M::M1, T9, "Ax = B(Cx + D) -> Ax = Cx + B + D"),
        (M::M1, T10, "Ax = B + C * D -> Ax = (B + C) + D"),
        (M::M1, T12, "Ax = B + C(Dx + E) -> Ax = Dx + (B + C) + E"),
        (M::M2S3, T9, "Ax = B(Cx + D) -> Ax = BCx + D"),
        (M::M2S3, T12, "Ax = B + C(Dx + E) -> Ax = CDx + B + E"),
        (M::M3, T10, "Ax = B + C * D -> Ax = (B + C) * D"),
        (M::M3, T12, "Ax = B + C(Dx + E) -> Ax = (B + C)(Dx + E)"),
        (M::M4, T8, "Ax = B(C * D) -> Ax = BC * BD"),
        (M::M5, T9, "Ax = B(Cx + D) -> Ax = B(BCx + BD)"),
        (M::M5, T12, "Ax = B + C(Dx + E) -> Ax = B + C(CDx + CE)"),
        (M::M6, T9, "Ax = B(Cx + D), B < 0, D < 0 -> Ax = BCx - BD"),
        (M::M6, T12, "Ax = B + C(Dx + E), C < 0, E < 0 -> Ax = CDx + B - CE"),
        (M::M8, T9, "Ax = B(Cx + D) -> Ax = Cx + BD"),
        (M::M8, T12, "Ax = B + C(Dx + E) -> Ax = Dx + B + CE"),
        (M::M11, T14, "Ax + B = Cx + D -> Ax + Cx = B + D"),
        (M::M12S15, T5, "Ax + B = C -> (A + B)x = C"),
        (M::M12S15, T6, "A + Bx = C -> (A + B)x = C"),
        (M::M12S15, T7, "Ax = Bx + C, C != 0 -> Ax = (B + C)x"),
        (M::M12S15, T9, "Ax = B(Cx + D) -> Ax = B(C + D)x"),
        (M::M12S15, T12, "Ax = B + C(Dx + E) -> Ax = C(D + E)x + B"),
        (M::M13, T5, "Ax + B = C -> (A + B) = C"),
        (M::M13, T6, "A + Bx = C -> (A + B) = C"),
        (M::M13, T7, "Ax = Bx + C, C != 0 -> Ax = (B + C)"),
        (M::M13, T9, "Ax = B(Cx + D) -> Ax = B * (C + D)"),
        (M::M13, T12, "Ax = B + C(Dx + E) -> Ax = B + C * (D + E)"),
        (M::M14, T2, "Ax = B + C, C > 0 -> Ax = B - C"),
        (M::M14, T4, "Ax + Bx = C, B > 0 -> Ax - Bx = C"),
        (M::M15, T2, "Ax = B - C, C > 0 -> Ax = B + C"),
        (M::M15, T4, "Ax - Bx = C, B > 0 -> Ax + Bx = C"),
        (M::M16, T3, "Ax = B * C -> Ax = B + C"),
        (M::M16, T10, "Ax = B ± C * D -> Ax = B ± (C + D)"),
        (M::M17, T2, "Ax = B + C, C > 0 -> Ax = C - B"),
        (M::M17, T4, "Ax + Bx = C, B > 0 -> Bx - Ax = C"),
        (M::M18, T2, "Ax = B - C, C > 0 -> Ax = C - B"),
        (M::M18, T4, "Ax - Bx = C, B > 0 -> Bx - Ax = C"),
    ]
};

pub fn applicable(m: MisconceptionId, t: ProblemType) -> bool {
    m.info().applicable_types.contains(&t)
}

/// Result of a rewrite before it is rendered.
enum Outcome {
    Shape(Shape),
    Solved(Rational),
    /// Both sides lost `x`.
    Constants(Rational, Rational),
}

/// The slot-level rewrite of `m` at this node, or `None` if `m` cannot fire
/// here (wrong type, wrong step, or instance condition unmet).
fn fire(m: MisconceptionId, shape: &Shape) -> Option<Outcome> {
    use MisconceptionId as M;
    use ProblemType::*;
    if !applicable(m, shape.ty) || m.is_solve_step() != (shape.ty == T1) {
        return None;
    }
    let s = &shape.slots;
    let v = |i: usize| s[i].clone();
    let to = |ty, slots| Some(Outcome::Shape(Shape::new(ty, slots)));
    match (m, shape.ty) {
        (M::M19, _) => Some(Outcome::Solved(&s[0] + &s[1])),
        (M::M20S20, _) => Some(Outcome::Solved(v(1))),
        (M::M21, _) => Some(Outcome::Solved(&s[0] - &s[1])),
        (M::M22S1, _) => s[0].checked_div(&s[1]).map(Outcome::Solved),

        (M::M1, T8) => to(T10, vec![v(0), v(1), v(2), v(3)]),
        (M::M1, T9) => to(T16, vec![v(0), v(2), v(1), v(3)]),
        (M::M1, T10) => to(T2, vec![v(0), &s[1] + &s[2], v(3)]),
        (M::M1, T12) => to(T16, vec![v(0), v(3), &s[1] + &s[2], v(4)]),

        (M::M2S3, T9) => to(T7, vec![v(0), &s[1] * &s[2], v(3)]),
        (M::M2S3, T12) => to(T16, vec![v(0), &s[2] * &s[3], v(1), v(4)]),

        (M::M3, T10) => to(T3, vec![v(0), &s[1] + &s[2], v(3)]),
        (M::M3, T12) => to(T9, vec![v(0), &s[1] + &s[2], v(3), v(4)]),

        (M::M4, T8) => to(T3, vec![v(0), &s[1] * &s[2], &s[1] * &s[3]]),

        (M::M5, T9) => to(T9, vec![v(0), v(1), &s[1] * &s[2], &s[1] * &s[3]]),
        (M::M5, T12) => to(T12, vec![v(0), v(1), v(2), &s[2] * &s[3], &s[2] * &s[4]]),

        (M::M6, T9) if s[1].is_negative() && s[3].is_negative() => {
            to(T7, vec![v(0), &s[1] * &s[2], -(&s[1] * &s[3])])
        }
        (M::M6, T12) if s[2].is_negative() && s[4].is_negative() => {
            to(T16, vec![v(0), &s[2] * &s[3], v(1), -(&s[2] * &s[4])])
        }

        (M::M8, T9) => to(T7, vec![v(0), v(2), &s[1] * &s[3]]),
        (M::M8, T12) => to(T16, vec![v(0), v(3), v(1), &s[2] * &s[4]]),

        (M::M11, T14) => to(T15, vec![v(0), v(2), v(1), v(3)]),

        (M::M12S15, T5 | T6) => to(T1, vec![&s[0] + &s[1], v(2)]),
        (M::M12S15, T7) if !s[2].is_zero() => to(T7, vec![v(0), &s[1] + &s[2], Rational::zero()]),
        (M::M12S15, T9) => to(T7, vec![v(0), &s[1] * &(&s[2] + &s[3]), Rational::zero()]),
        (M::M12S15, T12) => to(T7, vec![v(0), &s[2] * &(&s[3] + &s[4]), v(1)]),

        (M::M13, T5 | T6) => Some(Outcome::Constants(&s[0] + &s[1], v(2))),
        (M::M13, T7) if !s[2].is_zero() => to(T1, vec![v(0), &s[1] + &s[2]]),
        (M::M13, T9) => to(T3, vec![v(0), v(1), &s[2] + &s[3]]),
        (M::M13, T12) => to(T10, vec![v(0), v(1), v(2), &s[3] + &s[4]]),

        (M::M14, T2) if s[2].is_positive() => to(T2, vec![v(0), v(1), -v(2)]),
        (M::M14, T4) if s[1].is_positive() => to(T4, vec![v(0), -v(1), v(2)]),
        (M::M15, T2) if s[2].is_negative() => to(T2, vec![v(0), v(1), -v(2)]),
        (M::M15, T4) if s[1].is_negative() => to(T4, vec![v(0), -v(1), v(2)]),

        (M::M16, T3) => to(T2, vec![v(0), v(1), v(2)]),
        (M::M16, T10) => {
            let c = if s[2].is_negative() { &s[2] - &s[3] } else { &s[2] + &s[3] };
            to(T2, vec![v(0), v(1), c])
        }

        (M::M17, T2) if s[2].is_positive() => to(T2, vec![v(0), v(2), -v(1)]),
        (M::M17, T4) if s[1].is_positive() => to(T4, vec![v(1), -v(0), v(2)]),
        (M::M18, T2) if s[2].is_negative() => to(T2, vec![v(0), s[2].abs(), -v(1)]),
        (M::M18, T4) if s[1].is_negative() => to(T4, vec![s[1].abs(), -v(0), v(2)]),

        _ => None,
    }
}

/// Renders an outcome and reclassifies it.
fn realize(m: MisconceptionId, outcome: Outcome) -> Result<(Equation, Form)> {
    match outcome {
        Outcome::Shape(shape) => match settle(&shape) {
            Ok((equation, reread)) => Ok((equation, Form::Typed(reread.ty))),
            Err(Error::Unclassifiable(equation)) => {
                Err(Error::UnclassifiableResult { id: m, equation })
            }
            Err(other) => Err(other),
        },
        Outcome::Solved(value) => Ok((Equation::solved(value.clone()), Form::Solved(value))),
        Outcome::Constants(lhs, rhs) => {
            let form = if lhs == rhs { Form::Identity } else { Form::NoSolution };
            Ok((Equation::new(Expr::Constant(lhs), Expr::Constant(rhs)), form))
        }
    }
}

/// Fires `m` on a classified node. `None` when `m` cannot fire here.
pub(crate) fn fire_at(m: MisconceptionId, shape: &Shape) -> Option<Result<(Equation, Form)>> {
    fire(m, shape).map(|outcome| realize(m, outcome))
}

pub fn apply_misconception(m: MisconceptionId, e: &Equation) -> Result<(Equation, Form)> {
    let shape = Shape::of(e)?;
    fire_at(m, &shape).unwrap_or_else(|| {
        Err(Error::MisconceptionNotApplicable {
            id: m,
            equation: e.to_string(),
        })
    })
}

/// An ordered list of distinct misconception ids.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct MisconceptionSet(Vec<MisconceptionId>);

impl MisconceptionSet {
    pub fn new(ids: impl IntoIterator<Item = MisconceptionId>) -> Result<MisconceptionSet, String> {
        let mut out = Vec::new();
        for id in ids {
            if out.contains(&id) {
                return Err(format!("{id} listed twice"));
            }
            out.push(id);
        }
        Ok(MisconceptionSet(out))
    }

    pub fn empty() -> MisconceptionSet {
        MisconceptionSet(Vec::new())
    }

    pub fn single(id: MisconceptionId) -> MisconceptionSet {
        MisconceptionSet(vec![id])
    }

    /// The whole catalog in catalog order.
    pub fn full() -> MisconceptionSet {
        MisconceptionSet(MisconceptionId::ALL.to_vec())
    }

    pub fn ids(&self) -> &[MisconceptionId] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for MisconceptionSet {
    type Err = String;

    /// Comma-separated ids; the empty string is the empty set.
    fn from_str(s: &str) -> Result<MisconceptionSet, String> {
        let ids = s
            .split(',')
            .map(str::trim)
            .filter(|part| !part.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>, _>>()?;
        MisconceptionSet::new(ids)
    }
}

impl fmt::Display for MisconceptionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<&str> = self.0.iter().map(|m| m.as_str()).collect();
        f.write_str(&ids.join(","))
    }
}

/// At each node the first unused misconception in `ms` that can
/// fire replaces the correct step; otherwise the default correct edge (or the
/// solve step at `T1`) is taken.
pub fn reduce_with_misconceptions(e: &Equation, ms: &MisconceptionSet) -> Result<ReductionTrace> {
    let mut trace = ReductionTrace::default();
    let mut used: Vec<MisconceptionId> = Vec::new();
    let mut equation = e.clone();
    let mut form = Form::Typed(Shape::of(e)?.ty);
    while let Form::Typed(ty) = form {
        if trace.steps.len() >= MAX_TRACE_STEPS {
            return Err(Error::NonTermination(MAX_TRACE_STEPS));
        }
        let shape = Shape::of(&equation)?;
        let fired = ms
            .ids()
            .iter()
            .filter(|m| !used.contains(m))
            .find_map(|&m| fire_at(m, &shape).map(|result| (m, result)));
        let (edge, next) = match fired {
            Some((m, result)) => {
                used.push(m);
                (Edge::Misconception(m), result?)
            }
            None if ty == ProblemType::T1 => {
                let value = solve_shape(&shape, &equation)?;
                (Edge::Solve, (Equation::solved(value.clone()), Form::Solved(value)))
            }
            None => {
                let (_, rule) = correct_successors(ty)[0];
                let next = apply_rule(&shape, rule).expect("default edge leaves its source");
                let (next_equation, reread) = settle(&next)?;
                (Edge::Correct(rule), (next_equation, Form::Typed(reread.ty)))
            }
        };
        trace.steps.push(TraceStep {
            equation,
            form,
            edge: Some(edge),
        });
        (equation, form) = next;
    }
    trace.steps.push(TraceStep {
        equation,
        form,
        edge: None,
    });
    Ok(trace)
}
