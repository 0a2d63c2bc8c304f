//! Textual syntax for clock constraints.
//!
//! The grammar accepted by [`parse`]:
//!
//! ```text
//! expr  := conj ('||' conj)*
//! conj  := unary ('&&' unary)*
//! unary := '!' unary | '(' expr ')' | 'true' | 'false' | cmp
//! cmp   := side op side          op in <=, <, >=, >, ==
//! side  := CLOCK ['+' const] | const
//! const := INT | NAME            NAME is a declared integer constant
//! ```
//!
//! Everything is desugared into the core grammar (`x <= d`, `c <= x`,
//! `x + c <= y + d`, negation, conjunction). Printing always emits the core
//! forms, plus `c < x` / `x < d` / `x + c < y + d` for negated atoms and
//! `false` for `!true`, so `parse(print(e)) == e`.

use std::fmt;

use super::constraint::Constraint;
use super::ClockId;

/// An integer constant, either literal or a named parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConstRef {
    Lit(u32),
    Named(String),
}

impl fmt::Display for ConstRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstRef::Lit(v) => write!(f, "{v}"),
            ConstRef::Named(name) => f.write_str(name),
        }
    }
}

/// A clock constraint whose clocks and constants are still names.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    True,
    Upper(String, ConstRef),
    Lower(ConstRef, String),
    Diagonal {
        left: String,
        left_offset: ConstRef,
        right: String,
        right_offset: ConstRef,
    },
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprError {
    /// Byte offset into the parsed text.
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (at offset {})", self.message, self.offset)
    }
}

impl std::error::Error for ExprError {}

impl Expr {
    /// Substitutes clock indices and constant values.
    pub fn resolve<C, K>(&self, clock: &C, constant: &K) -> Result<Constraint, String>
    where
        C: Fn(&str) -> Option<ClockId>,
        K: Fn(&str) -> Option<u32>,
    {
        let clk = |name: &str| clock(name).ok_or_else(|| format!("unknown clock `{name}`"));
        let cst = |c: &ConstRef| match c {
            ConstRef::Lit(v) => Ok(*v),
            ConstRef::Named(name) => {
                constant(name).ok_or_else(|| format!("unbound constant `{name}`"))
            }
        };
        Ok(match self {
            Expr::True => Constraint::True,
            Expr::Upper(x, d) => Constraint::Upper(clk(x)?, cst(d)?),
            Expr::Lower(c, x) => Constraint::Lower(cst(c)?, clk(x)?),
            Expr::Diagonal {
                left,
                left_offset,
                right,
                right_offset,
            } => Constraint::Diagonal {
                left: clk(left)?,
                left_offset: cst(left_offset)?,
                right: clk(right)?,
                right_offset: cst(right_offset)?,
            },
            Expr::Not(inner) => Constraint::Not(Box::new(inner.resolve(clock, constant)?)),
            Expr::And(a, b) => Constraint::And(
                Box::new(a.resolve(clock, constant)?),
                Box::new(b.resolve(clock, constant)?),
            ),
        })
    }

    pub fn clock_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_clocks(&mut out);
        out
    }

    fn collect_clocks<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::True => {}
            Expr::Upper(x, _) | Expr::Lower(_, x) => out.push(x),
            Expr::Diagonal { left, right, .. } => {
                out.push(left);
                out.push(right);
            }
            Expr::Not(inner) => inner.collect_clocks(out),
            Expr::And(a, b) => {
                a.collect_clocks(out);
                b.collect_clocks(out);
            }
        }
    }

    fn write_unary(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::And(..) => write!(f, "({self})"),
            _ => write!(f, "{self}"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::True => f.write_str("true"),
            Expr::Upper(x, d) => write!(f, "{x} <= {d}"),
            Expr::Lower(c, x) => write!(f, "{c} <= {x}"),
            Expr::Diagonal {
                left,
                left_offset,
                right,
                right_offset,
            } => write!(f, "{left} + {left_offset} <= {right} + {right_offset}"),
            Expr::Not(inner) => match inner.as_ref() {
                Expr::True => f.write_str("false"),
                Expr::Upper(x, d) => write!(f, "{d} < {x}"),
                Expr::Lower(c, x) => write!(f, "{x} < {c}"),
                Expr::Diagonal {
                    left,
                    left_offset,
                    right,
                    right_offset,
                } => write!(f, "{right} + {right_offset} < {left} + {left_offset}"),
                other => {
                    f.write_str("!")?;
                    match other {
                        Expr::Not(_) => write!(f, "{other}"),
                        _ => write!(f, "({other})"),
                    }
                }
            },
            Expr::And(a, b) => {
                write!(f, "{a} && ")?;
                b.write_unary(f)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(u32),
    Le,
    Lt,
    Ge,
    Gt,
    EqEq,
    Plus,
    Bang,
    AndAnd,
    OrOr,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let two = |s: &str| text[i..].starts_with(s);
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = if two("<=") {
            i += 2;
            Tok::Le
        } else if two(">=") {
            i += 2;
            Tok::Ge
        } else if two("==") {
            i += 2;
            Tok::EqEq
        } else if two("&&") {
            i += 2;
            Tok::AndAnd
        } else if two("||") {
            i += 2;
            Tok::OrOr
        } else if c == b'<' {
            i += 1;
            Tok::Lt
        } else if c == b'>' {
            i += 1;
            Tok::Gt
        } else if c == b'+' {
            i += 1;
            Tok::Plus
        } else if c == b'!' {
            i += 1;
            Tok::Bang
        } else if c == b'(' {
            i += 1;
            Tok::LParen
        } else if c == b')' {
            i += 1;
            Tok::RParen
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let value = text[start..i].parse::<u32>().map_err(|_| ExprError {
                offset: start,
                message: format!("integer `{}` out of range", &text[start..i]),
            })?;
            Tok::Int(value)
        } else if c.is_ascii_alphabetic() || c == b'_' || c >= 0x80 {
            // identifiers may carry unicode (e.g. Greek subscripts)
            let rest = &text[i..];
            let len = rest
                .char_indices()
                .find(|&(_, ch)| !(ch.is_alphanumeric() || ch == '_' || ch == '\''))
                .map(|(idx, _)| idx)
                .unwrap_or(rest.len());
            if len == 0 {
                return Err(ExprError {
                    offset: start,
                    message: format!("unexpected character `{}`", rest.chars().next().unwrap()),
                });
            }
            i += len;
            Tok::Ident(text[start..i].to_string())
        } else {
            return Err(ExprError {
                offset: start,
                message: format!("unexpected character `{}`", c as char),
            });
        };
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser<'a, F> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    is_clock: &'a F,
}

enum Side {
    Clock(String, ConstRef),
    Const(ConstRef),
}

impl<F: Fn(&str) -> bool> Parser<'_, F> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn bump(&mut self) -> Option<Tok> {
        let tok = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        tok
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut left = self.conj()?;
        while self.peek() == Some(&Tok::OrOr) {
            self.bump();
            let right = self.conj()?;
            left = Expr::Not(Box::new(Expr::And(
                Box::new(Expr::Not(Box::new(left))),
                Box::new(Expr::Not(Box::new(right))),
            )));
        }
        Ok(left)
    }

    fn conj(&mut self) -> Result<Expr, ExprError> {
        let mut left = self.unary()?;
        while self.peek() == Some(&Tok::AndAnd) {
            self.bump();
            let right = self.unary()?;
            left = Expr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.bump();
                Ok(Expr::Not(Box::new(self.unary()?)))
            }
            Some(Tok::LParen) => {
                self.bump();
                let inner = self.expr()?;
                if self.bump() != Some(Tok::RParen) {
                    self.pos -= 1;
                    return self.err("expected `)`");
                }
                Ok(inner)
            }
            Some(Tok::Ident(name)) if name == "true" => {
                self.bump();
                Ok(Expr::True)
            }
            Some(Tok::Ident(name)) if name == "false" => {
                self.bump();
                Ok(Expr::Not(Box::new(Expr::True)))
            }
            Some(_) => self.comparison(),
            None => self.err("unexpected end of constraint"),
        }
    }

    fn constant(&mut self) -> Result<ConstRef, ExprError> {
        match self.bump() {
            Some(Tok::Int(v)) => Ok(ConstRef::Lit(v)),
            Some(Tok::Ident(name)) if !(self.is_clock)(&name) => Ok(ConstRef::Named(name)),
            _ => {
                self.pos -= 1;
                self.err("expected an integer constant")
            }
        }
    }

    fn side(&mut self) -> Result<Side, ExprError> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) if (self.is_clock)(&name) => {
                self.bump();
                if self.peek() == Some(&Tok::Plus) {
                    self.bump();
                    let offset = self.constant()?;
                    Ok(Side::Clock(name, offset))
                } else {
                    Ok(Side::Clock(name, ConstRef::Lit(0)))
                }
            }
            Some(Tok::Int(_)) | Some(Tok::Ident(_)) => Ok(Side::Const(self.constant()?)),
            _ => self.err("expected a clock or a constant"),
        }
    }

    fn comparison(&mut self) -> Result<Expr, ExprError> {
        let start = self.offset();
        let left = self.side()?;
        let op = match self.bump() {
            Some(t @ (Tok::Le | Tok::Lt | Tok::Ge | Tok::Gt | Tok::EqEq)) => t,
            _ => {
                self.pos -= 1;
                return self.err("expected a comparison operator");
            }
        };
        let right = self.side()?;
        let zero = |c: &ConstRef| *c == ConstRef::Lit(0);
        // normalise to `a <= b` / `a < b`
        let (lo, hi, strict, equal) = match op {
            Tok::Le => (left, right, false, false),
            Tok::Lt => (left, right, true, false),
            Tok::Ge => (right, left, false, false),
            Tok::Gt => (right, left, true, false),
            _ => (left, right, false, true),
        };
        let le = |lo: &Side, hi: &Side| -> Option<Expr> {
            match (lo, hi) {
                (Side::Clock(x, off), Side::Const(d)) if zero(off) => {
                    Some(Expr::Upper(x.clone(), d.clone()))
                }
                (Side::Const(c), Side::Clock(x, off)) if zero(off) => {
                    Some(Expr::Lower(c.clone(), x.clone()))
                }
                (Side::Clock(x, c), Side::Clock(y, d)) => Some(Expr::Diagonal {
                    left: x.clone(),
                    left_offset: c.clone(),
                    right: y.clone(),
                    right_offset: d.clone(),
                }),
                _ => None,
            }
        };
        let unsupported = || {
            ExprError {
            offset: start,
            message: "unsupported comparison (compare a clock with a constant, or clock + c with clock + d)"
                .to_string(),
        }
        };
        if equal {
            let a = le(&lo, &hi).ok_or_else(unsupported)?;
            let b = le(&hi, &lo).ok_or_else(unsupported)?;
            // `x == c` reads most naturally as `c <= x && x <= c`
            return Ok(match (&a, &b) {
                (Expr::Upper(..), Expr::Lower(..)) => Expr::And(Box::new(b), Box::new(a)),
                _ => Expr::And(Box::new(a), Box::new(b)),
            });
        }
        if strict {
            // a < b  ==  !(b <= a)
            let flipped = le(&hi, &lo).ok_or_else(unsupported)?;
            Ok(Expr::Not(Box::new(flipped)))
        } else {
            le(&lo, &hi).ok_or_else(unsupported)
        }
    }
}

/// Parses a constraint. `is_clock` decides whether an identifier names a
/// clock; every other identifier is taken as a named constant.
pub fn parse<F: Fn(&str) -> bool>(text: &str, is_clock: &F) -> Result<Expr, ExprError> {
    let toks = tokenize(text)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        end: text.len(),
        is_clock,
    };
    let expr = parser.expr()?;
    if parser.pos < parser.toks.len() {
        return parser.err("unexpected trailing input");
    }
    Ok(expr)
}

/// Parses and resolves against concrete clock names, without constants.
pub fn parse_constraint(text: &str, clocks: &[String]) -> Result<Constraint, String> {
    let is_clock = |s: &str| clocks.iter().any(|c| c == s);
    let expr = parse(text, &is_clock).map_err(|e| e.to_string())?;
    expr.resolve(
        &|s: &str| clocks.iter().position(|c| c == s).map(ClockId),
        &|_| None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clocks() -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    fn p(text: &str) -> Constraint {
        parse_constraint(text, &clocks()).unwrap()
    }

    #[test]
    fn diagonal_literal() {
        assert_eq!(
            p("x + 1 <= y + 0"),
            Constraint::diagonal(ClockId(0), 1, ClockId(1), 0)
        );
    }

    #[test]
    fn sugar_desugars() {
        assert_eq!(p("x > 3"), Constraint::strict_lower(3, ClockId(0)));
        assert_eq!(p("3 < x"), Constraint::strict_lower(3, ClockId(0)));
        assert_eq!(p("x >= 2"), Constraint::lower(2, ClockId(0)));
        assert_eq!(p("x < 2"), Constraint::strict_upper(ClockId(0), 2));
        assert_eq!(p("x == 1"), Constraint::equals(ClockId(0), 1));
        assert_eq!(p("false"), Constraint::falsum());
        assert_eq!(
            p("x <= 1 || y <= 2"),
            Constraint::upper(ClockId(0), 1).or(Constraint::upper(ClockId(1), 2))
        );
    }

    #[test]
    fn named_constants_resolve() {
        let is_clock = |s: &str| s == "y";
        let expr = parse("y <= C_α && W_β < y", &is_clock).unwrap();
        let c = expr
            .resolve(
                &|s: &str| (s == "y").then_some(ClockId(0)),
                &|s: &str| match s {
                    "C_α" => Some(3),
                    "W_β" => Some(5),
                    _ => None,
                },
            )
            .unwrap();
        assert_eq!(
            c,
            Constraint::upper(ClockId(0), 3).and(Constraint::strict_lower(5, ClockId(0)))
        );
        assert_eq!(expr.to_string(), "y <= C_α && W_β < y");
    }

    #[test]
    fn unbound_constant_is_reported() {
        let is_clock = |s: &str| s == "y";
        let expr = parse("y <= K", &is_clock).unwrap();
        let err = expr.resolve(&|_| Some(ClockId(0)), &|_| None).unwrap_err();
        assert!(err.contains("K"));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let err = parse("x <= ", &|s: &str| s == "x").unwrap_err();
        assert_eq!(err.offset, 5);
        let err = parse("x <= 1 )", &|s: &str| s == "x").unwrap_err();
        assert_eq!(err.offset, 7);
        let err = parse("x + 1 <= 3", &|s: &str| s == "x").unwrap_err();
        assert_eq!(err.offset, 0);
    }

    #[test]
    fn printing_round_trips() {
        for text in [
            "true",
            "false",
            "x <= 3",
            "2 <= x",
            "3 < x",
            "x < 3",
            "x + 1 <= y + 0",
            "y + 0 < x + 1",
            "!(x <= 1 && y <= 2)",
            "!!(x <= 1 && y <= 2)",
            "x <= 1 && (y <= 2 && 1 <= x)",
            "!false",
        ] {
            let c = p(text);
            let printed = c.display(&clocks()).to_string();
            assert_eq!(p(&printed), c, "{text} -> {printed}");
            assert_eq!(printed, text);
        }
    }
}
