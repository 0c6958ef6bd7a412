//! Expression trees for one-variable linear equations.
//!
//! The tree keeps the surface structure of the text it came from: explicit
//! parentheses survive as [`Expr::Parenthesized`] and sums stay in the order
//! they were written. Problem types are told apart by exactly that structure
//! (`Ax = B(Cx + D)` and `Ax = Bx + C` have the same value but different types).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, ParseError, Result};
use crate::rational::Rational;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Expr {
    Constant(Rational),
    /// The unknown `x`.
    Variable,
    Negation(Box<Expr>),
    Sum(Box<Expr>, Box<Expr>),
    Difference(Box<Expr>, Box<Expr>),
    Product(Box<Expr>, Box<Expr>),
    /// A coefficient written directly in front of `x`, as in `3x` or `-1/2x`.
    ScaledVariable(Rational),
    Parenthesized(Box<Expr>),
}

impl Expr {
    pub fn constant(value: impl Into<Rational>) -> Expr {
        Expr::Constant(value.into())
    }

    pub fn scaled(coefficient: impl Into<Rational>) -> Expr {
        Expr::ScaledVariable(coefficient.into())
    }

    pub fn sum(lhs: Expr, rhs: Expr) -> Expr {
        Expr::Sum(Box::new(lhs), Box::new(rhs))
    }

    pub fn difference(lhs: Expr, rhs: Expr) -> Expr {
        Expr::Difference(Box::new(lhs), Box::new(rhs))
    }

    pub fn product(lhs: Expr, rhs: Expr) -> Expr {
        Expr::Product(Box::new(lhs), Box::new(rhs))
    }

    pub fn negation(inner: Expr) -> Expr {
        Expr::Negation(Box::new(inner))
    }

    pub fn parens(inner: Expr) -> Expr {
        Expr::Parenthesized(Box::new(inner))
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Constant(_) | Expr::Variable | Expr::ScaledVariable(_) => 1,
            Expr::Negation(inner) | Expr::Parenthesized(inner) => 1 + inner.size(),
            Expr::Sum(l, r) | Expr::Difference(l, r) | Expr::Product(l, r) => {
                1 + l.size() + r.size()
            }
        }
    }

    pub fn evaluate(&self, x: &Rational) -> Rational {
        match self {
            Expr::Constant(c) => c.clone(),
            Expr::Variable => x.clone(),
            Expr::ScaledVariable(k) => k * x,
            Expr::Negation(inner) => -inner.evaluate(x),
            Expr::Parenthesized(inner) => inner.evaluate(x),
            Expr::Sum(l, r) => l.evaluate(x) + r.evaluate(x),
            Expr::Difference(l, r) => l.evaluate(x) - r.evaluate(x),
            Expr::Product(l, r) => l.evaluate(x) * r.evaluate(x),
        }
    }

    /// `(slope, intercept)` of the expression, or `None` when it has degree > 1.
    pub fn linear_form(&self) -> Option<(Rational, Rational)> {
        Some(match self {
            Expr::Constant(c) => (Rational::zero(), c.clone()),
            Expr::Variable => (Rational::one(), Rational::zero()),
            Expr::ScaledVariable(k) => (k.clone(), Rational::zero()),
            Expr::Negation(inner) => {
                let (m, b) = inner.linear_form()?;
                (-m, -b)
            }
            Expr::Parenthesized(inner) => inner.linear_form()?,
            Expr::Sum(l, r) => {
                let (m1, b1) = l.linear_form()?;
                let (m2, b2) = r.linear_form()?;
                (m1 + m2, b1 + b2)
            }
            Expr::Difference(l, r) => {
                let (m1, b1) = l.linear_form()?;
                let (m2, b2) = r.linear_form()?;
                (m1 - m2, b1 - b2)
            }
            Expr::Product(l, r) => {
                let (m1, b1) = l.linear_form()?;
                let (m2, b2) = r.linear_form()?;
                if !m1.is_zero() && !m2.is_zero() {
                    return None;
                }
                (&m1 * &b2 + &m2 * &b1, b1 * b2)
            }
        })
    }

    pub fn mentions_variable(&self) -> bool {
        match self {
            Expr::Constant(_) => false,
            Expr::Variable | Expr::ScaledVariable(_) => true,
            Expr::Negation(inner) | Expr::Parenthesized(inner) => inner.mentions_variable(),
            Expr::Sum(l, r) | Expr::Difference(l, r) | Expr::Product(l, r) => {
                l.mentions_variable() || r.mentions_variable()
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Constant(c) => write!(f, "{c}"),
            Expr::Variable => f.write_str("x"),
            Expr::ScaledVariable(k) => write!(f, "{k}x"),
            Expr::Negation(inner) => write!(f, "-{inner}"),
            Expr::Sum(l, r) => write!(f, "{l} + {r}"),
            Expr::Difference(l, r) => write!(f, "{l} - {r}"),
            Expr::Product(l, r) => match (l.as_ref(), r.as_ref()) {
                (Expr::Constant(_), Expr::Parenthesized(_)) => write!(f, "{l}{r}"),
                _ => write!(f, "{l} * {r}"),
            },
            Expr::Parenthesized(inner) => write!(f, "({inner})"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Equation {
    pub lhs: Expr,
    pub rhs: Expr,
}

impl Equation {
    pub fn new(lhs: Expr, rhs: Expr) -> Equation {
        Equation { lhs, rhs }
    }

    /// The solved form `x = value`.
    pub fn solved(value: Rational) -> Equation {
        Equation::new(Expr::Variable, Expr::Constant(value))
    }

    pub fn size(&self) -> usize {
        self.lhs.size() + self.rhs.size()
    }

    pub fn evaluate_sides(&self, x: &Rational) -> (Rational, Rational) {
        (self.lhs.evaluate(x), self.rhs.evaluate(x))
    }

    /// `(slope, intercept)` of `lhs - rhs`.
    pub fn linear_form(&self) -> Option<(Rational, Rational)> {
        let (m1, b1) = self.lhs.linear_form()?;
        let (m2, b2) = self.rhs.linear_form()?;
        Some((m1 - m2, b1 - b2))
    }

    /// The unique root, found from the line through `(0, f(0))` and
    /// `(1, f(1))` where `f = lhs - rhs`. Independent of the reduction engine.
    pub fn closed_form_solution(&self) -> Result<Rational> {
        let at = |x: Rational| {
            let (l, r) = self.evaluate_sides(&x);
            l - r
        };
        let f0 = at(Rational::zero());
        let f1 = at(Rational::one());
        let slope = &f1 - &f0;
        (-f0)
            .checked_div(&slope)
            .ok_or_else(|| Error::NoUniqueSolution(self.to_string()))
    }

    /// `Some(value)` when the equation is literally `x = value`.
    pub fn as_solved(&self) -> Option<&Rational> {
        match (&self.lhs, &self.rhs) {
            (Expr::Variable, Expr::Constant(v)) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

impl FromStr for Equation {
    type Err = ParseError;

    fn from_str(text: &str) -> std::result::Result<Equation, ParseError> {
        crate::parser::parse(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq(text: &str) -> Equation {
        text.parse().unwrap()
    }

    #[test]
    fn evaluates_both_sides() {
        assert_eq!(
            eq("2x = 3(4x + 5)").evaluate_sides(&Rational::one()),
            (Rational::integer(2), Rational::integer(27))
        );
        assert_eq!(
            eq("3x = 12").evaluate_sides(&Rational::integer(4)),
            (Rational::integer(12), Rational::integer(12))
        );
        let half = Rational::new(1, 2);
        assert_eq!(eq("x = 1/2").evaluate_sides(&half), (half.clone(), half));
    }

    #[test]
    fn closed_form_uses_two_point_line() {
        assert_eq!(eq("3x = 12").closed_form_solution().unwrap(), Rational::integer(4));
        assert_eq!(
            eq("2x = 3(4x + 5)").closed_form_solution().unwrap(),
            Rational::new(-3, 2)
        );
        assert!(matches!(
            eq("5 = 5").closed_form_solution(),
            Err(Error::NoUniqueSolution(_))
        ));
    }

    #[test]
    fn prints_with_fixed_spacing() {
        let e = Equation::new(
            Expr::scaled(2),
            Expr::product(
                Expr::constant(-3),
                Expr::parens(Expr::sum(Expr::scaled(4), Expr::constant(5))),
            ),
        );
        assert_eq!(e.to_string(), "2x = -3(4x + 5)");
        assert_eq!(Equation::new(Expr::scaled(3), Expr::constant(12)).to_string(), "3x = 12");
    }

    #[test]
    fn size_counts_parentheses() {
        assert_eq!(eq("2x = 3(4x + 5)").size(), 1 + 6);
        assert_eq!(eq("2x = 12x + 15").size(), 4);
    }
}
