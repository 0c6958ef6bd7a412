//! Recursive-descent parser for the equation grammar.
//!
//! ```text
//! equation := expr "=" expr
//! expr     := term (("+" | "-") term)*
//! term     := factor ("*" factor | "(" expr ")")*
//! factor   := ["-"] (number | number "x" | "x" | "(" expr ")" | number "(" expr ")")
//! number   := integer | integer "/" positive-integer
//! ```
//!
//! A leading minus binds to the factor right after it, so `-3(4x - 5)` is
//! `Product(-3, (4x - 5))` rather than a negated product.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::ParseError;
use crate::expr::{Equation, Expr};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Integer(BigInt),
    X,
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Equals,
    End,
}

impl Token {
    fn describe(&self) -> &'static str {
        match self {
            Token::Integer(_) => "number",
            Token::X => "`x`",
            Token::Plus => "`+`",
            Token::Minus => "`-`",
            Token::Star => "`*`",
            Token::Slash => "`/`",
            Token::LParen => "`(`",
            Token::RParen => "`)`",
            Token::Equals => "`=`",
            Token::End => "end of input",
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = text[i..].chars().next().expect("in bounds");
        let token = match c {
            c if c.is_whitespace() => {
                i += c.len_utf8();
                continue;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let value = text[start..i].parse().expect("ascii digits");
                tokens.push((Token::Integer(value), start));
                continue;
            }
            'x' => Token::X,
            '+' => Token::Plus,
            '-' => Token::Minus,
            '*' => Token::Star,
            '/' => Token::Slash,
            '(' => Token::LParen,
            ')' => Token::RParen,
            '=' => Token::Equals,
            c if c.is_alphabetic() => {
                return Err(ParseError::MultipleVariables {
                    symbol: c,
                    position: i,
                })
            }
            _ => {
                return Err(ParseError::Syntax {
                    position: i,
                    expected: format!("a token, found `{c}`"),
                })
            }
        };
        tokens.push((token, i));
        i += c.len_utf8();
    }
    tokens.push((Token::End, text.len()));
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn position(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Token {
        let token = self.tokens[self.pos].0.clone();
        if token != Token::End {
            self.pos += 1;
        }
        token
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            position: self.position(),
            expected: format!("{expected}, found {}", self.peek().describe()),
        }
    }

    fn expect(&mut self, token: Token, expected: &str) -> Result<(), ParseError> {
        if *self.peek() == token {
            self.bump();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn equation(&mut self) -> Result<Equation, ParseError> {
        let lhs = self.expr()?;
        self.expect(Token::Equals, "`=`")?;
        let rhs = self.expr()?;
        if *self.peek() != Token::End {
            return Err(self.error("end of input"));
        }
        Ok(Equation::new(lhs, rhs))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Token::Plus => {
                    self.bump();
                    acc = Expr::sum(acc, self.term()?);
                }
                Token::Minus => {
                    self.bump();
                    acc = Expr::difference(acc, self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Token::Star => {
                    self.bump();
                    acc = Expr::product(acc, self.factor()?);
                }
                Token::LParen => {
                    let group = self.group()?;
                    acc = Expr::product(acc, group);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn group(&mut self) -> Result<Expr, ParseError> {
        self.expect(Token::LParen, "`(`")?;
        let inner = self.expr()?;
        self.expect(Token::RParen, "`)`")?;
        Ok(Expr::parens(inner))
    }

    fn number(&mut self) -> Result<Rational, ParseError> {
        let numer = match self.bump() {
            Token::Integer(n) => n,
            _ => unreachable!("caller checked for an integer"),
        };
        if *self.peek() != Token::Slash {
            return Ok(Rational::from(numer));
        }
        self.bump();
        match self.peek().clone() {
            Token::Integer(denom) if !denom.is_zero() => {
                self.bump();
                Ok(Rational::from(numer)
                    .checked_div(&Rational::from(denom))
                    .expect("denominator checked non-zero"))
            }
            _ => Err(self.error("positive integer denominator")),
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let negative = if *self.peek() == Token::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.peek() {
            Token::Integer(_) => {
                let mut value = self.number()?;
                if negative {
                    value = -value;
                }
                match self.peek() {
                    Token::X => {
                        self.bump();
                        Ok(Expr::ScaledVariable(value))
                    }
                    Token::LParen => {
                        let group = self.group()?;
                        Ok(Expr::product(Expr::Constant(value), group))
                    }
                    _ => Ok(Expr::Constant(value)),
                }
            }
            Token::X => {
                self.bump();
                Ok(if negative {
                    Expr::negation(Expr::Variable)
                } else {
                    Expr::Variable
                })
            }
            Token::LParen => {
                let group = self.group()?;
                Ok(if negative { Expr::negation(group) } else { group })
            }
            _ => Err(self.error("number, `x` or `(`")),
        }
    }
}

/// Parses an equation, rejecting anything that is not linear in `x`.
pub fn parse(text: &str) -> Result<Equation, ParseError> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        pos: 0,
    };
    let equation = parser.equation()?;
    if equation.linear_form().is_none() {
        return Err(ParseError::Nonlinear);
    }
    Ok(equation)
}
