//! Clock constraints over nonnegative integer constants.

use std::fmt;
use std::ops::Add;

use num::{BigInt, BigRational, ToPrimitive};

use super::expr::{ConstRef, Expr};
use super::valuation::Valuation;
use super::{ClockId, ClockSet, ModelError};

/// A clock constraint:
/// `true | x <= d | c <= x | x + c <= y + d | !phi | phi && phi`.
///
/// Strict comparisons and disjunctions are sugar on top of negation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    True,
    /// `x <= d`
    Upper(ClockId, u32),
    /// `c <= x`
    Lower(u32, ClockId),
    /// `left + left_offset <= right + right_offset`
    Diagonal {
        left: ClockId,
        left_offset: u32,
        right: ClockId,
        right_offset: u32,
    },
    Not(Box<Constraint>),
    And(Box<Constraint>, Box<Constraint>),
}

/// Numeric types a constraint can be evaluated over.
pub trait ClockScalar: Clone + PartialOrd + Add<Output = Self> {
    fn from_constant(c: u32) -> Self;
}

impl ClockScalar for BigRational {
    fn from_constant(c: u32) -> Self {
        BigRational::from_integer(BigInt::from(c))
    }
}

impl ClockScalar for i64 {
    fn from_constant(c: u32) -> Self {
        i64::from(c)
    }
}

impl ClockScalar for f64 {
    fn from_constant(c: u32) -> Self {
        f64::from(c)
    }
}

impl Constraint {
    pub fn falsum() -> Self {
        Constraint::Not(Box::new(Constraint::True))
    }

    pub fn upper(clock: ClockId, bound: u32) -> Self {
        Constraint::Upper(clock, bound)
    }

    pub fn lower(bound: u32, clock: ClockId) -> Self {
        Constraint::Lower(bound, clock)
    }

    /// `x < d`
    pub fn strict_upper(clock: ClockId, bound: u32) -> Self {
        Constraint::Lower(bound, clock).negate()
    }

    /// `c < x`
    pub fn strict_lower(bound: u32, clock: ClockId) -> Self {
        Constraint::Upper(clock, bound).negate()
    }

    /// `x = c`
    pub fn equals(clock: ClockId, value: u32) -> Self {
        Constraint::Lower(value, clock).and(Constraint::Upper(clock, value))
    }

    pub fn diagonal(left: ClockId, left_offset: u32, right: ClockId, right_offset: u32) -> Self {
        Constraint::Diagonal {
            left,
            left_offset,
            right,
            right_offset,
        }
    }

    pub fn negate(self) -> Self {
        Constraint::Not(Box::new(self))
    }

    pub fn and(self, other: Constraint) -> Self {
        Constraint::And(Box::new(self), Box::new(other))
    }

    /// `a || b` encoded as `!(!a && !b)`.
    pub fn or(self, other: Constraint) -> Self {
        self.negate().and(other.negate()).negate()
    }

    /// Conjunction of all items; `true` when empty.
    pub fn conjunction<I: IntoIterator<Item = Constraint>>(items: I) -> Self {
        let mut iter = items.into_iter();
        match iter.next() {
            None => Constraint::True,
            Some(first) => iter.fold(first, Constraint::and),
        }
    }

    /// Conjunction that drops literal `true` operands.
    pub fn conjunction_simplified<I: IntoIterator<Item = Constraint>>(items: I) -> Self {
        Constraint::conjunction(items.into_iter().filter(|c| *c != Constraint::True))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Constraint::True)
    }

    pub fn clocks(&self) -> ClockSet {
        let mut set = ClockSet::empty();
        self.visit_atoms(&mut |atom| match atom {
            Constraint::Upper(x, _) | Constraint::Lower(_, x) => set.insert(*x),
            Constraint::Diagonal { left, right, .. } => {
                set.insert(*left);
                set.insert(*right);
            }
            _ => {}
        });
        set
    }

    pub fn max_constant(&self) -> u32 {
        let mut max = 0;
        self.visit_atoms(&mut |atom| match atom {
            Constraint::Upper(_, c) | Constraint::Lower(c, _) => max = max.max(*c),
            Constraint::Diagonal {
                left_offset,
                right_offset,
                ..
            } => max = max.max(*left_offset).max(*right_offset),
            _ => {}
        });
        max
    }

    /// Largest constant compared against each clock, indexed by clock.
    pub fn max_constant_per_clock(&self, out: &mut [u32]) {
        self.visit_atoms(&mut |atom| match atom {
            Constraint::Upper(x, c) | Constraint::Lower(c, x) => {
                if let Some(slot) = out.get_mut(x.0) {
                    *slot = (*slot).max(*c);
                }
            }
            Constraint::Diagonal {
                left,
                left_offset,
                right,
                right_offset,
            } => {
                let c = (*left_offset).max(*right_offset);
                for x in [left, right] {
                    if let Some(slot) = out.get_mut(x.0) {
                        *slot = (*slot).max(c);
                    }
                }
            }
            _ => {}
        });
    }

    pub fn has_diagonal(&self) -> bool {
        let mut found = false;
        self.visit_atoms(&mut |atom| {
            if matches!(atom, Constraint::Diagonal { .. }) {
                found = true;
            }
        });
        found
    }

    /// First diagonal atom, if any.
    pub fn find_diagonal(&self) -> Option<Constraint> {
        let mut found = None;
        self.visit_atoms(&mut |atom| {
            if found.is_none() && matches!(atom, Constraint::Diagonal { .. }) {
                found = Some(atom.clone());
            }
        });
        found
    }

    /// True when the constraint, in negation normal form, uses only
    /// non-strict comparisons.
    pub fn is_closed(&self) -> bool {
        fn walk(c: &Constraint, positive: bool) -> bool {
            match c {
                Constraint::True => true,
                Constraint::Upper(..) | Constraint::Lower(..) | Constraint::Diagonal { .. } => {
                    positive
                }
                Constraint::Not(inner) => walk(inner, !positive),
                Constraint::And(a, b) => walk(a, positive) && walk(b, positive),
            }
        }
        walk(self, true)
    }

    fn visit_atoms<F: FnMut(&Constraint)>(&self, f: &mut F) {
        match self {
            Constraint::Not(inner) => inner.visit_atoms(f),
            Constraint::And(a, b) => {
                a.visit_atoms(f);
                b.visit_atoms(f);
            }
            atom => f(atom),
        }
    }

    /// Renumbers clocks, e.g. when embedding an automaton's constraints into
    /// a product clock space.
    pub fn map_clocks<F: Fn(ClockId) -> ClockId + Copy>(&self, f: F) -> Constraint {
        match self {
            Constraint::True => Constraint::True,
            Constraint::Upper(x, d) => Constraint::Upper(f(*x), *d),
            Constraint::Lower(c, x) => Constraint::Lower(*c, f(*x)),
            Constraint::Diagonal {
                left,
                left_offset,
                right,
                right_offset,
            } => Constraint::Diagonal {
                left: f(*left),
                left_offset: *left_offset,
                right: f(*right),
                right_offset: *right_offset,
            },
            Constraint::Not(inner) => Constraint::Not(Box::new(inner.map_clocks(f))),
            Constraint::And(a, b) => {
                Constraint::And(Box::new(a.map_clocks(f)), Box::new(b.map_clocks(f)))
            }
        }
    }

    /// Evaluates with clock values supplied by `value`; `None` when a clock
    /// has no value.
    pub fn eval_with<T, F>(&self, value: &F) -> Option<bool>
    where
        T: ClockScalar,
        F: Fn(ClockId) -> Option<T>,
    {
        Some(match self {
            Constraint::True => true,
            Constraint::Upper(x, d) => value(*x)? <= T::from_constant(*d),
            Constraint::Lower(c, x) => T::from_constant(*c) <= value(*x)?,
            Constraint::Diagonal {
                left,
                left_offset,
                right,
                right_offset,
            } => {
                value(*left)? + T::from_constant(*left_offset)
                    <= value(*right)? + T::from_constant(*right_offset)
            }
            Constraint::Not(inner) => !inner.eval_with(value)?,
            Constraint::And(a, b) => {
                // evaluate both sides so unknown clocks surface regardless of order
                let left = a.eval_with(value)?;
                let right = b.eval_with(value)?;
                left && right
            }
        })
    }

    /// `valuation |= self`.
    pub fn eval(&self, valuation: &Valuation) -> Result<bool, ModelError> {
        let values = valuation.values();
        self.eval_with(&|x: ClockId| values.get(x.0).cloned())
            .ok_or_else(|| {
                let bad = self
                    .clocks()
                    .iter()
                    .find(|x| x.0 >= values.len())
                    .map(|x| x.0)
                    .unwrap_or(0);
                ModelError::UnknownClock(bad)
            })
    }

    /// Evaluation over floating-point values; used by samplers and tests.
    pub fn eval_f64(&self, values: &[f64]) -> Option<bool> {
        self.eval_with(&|x: ClockId| values.get(x.0).copied())
    }

    pub fn to_expr(&self, clock_names: &[String]) -> Expr {
        let name = |x: &ClockId| {
            clock_names
                .get(x.0)
                .cloned()
                .unwrap_or_else(|| format!("#{}", x.0))
        };
        match self {
            Constraint::True => Expr::True,
            Constraint::Upper(x, d) => Expr::Upper(name(x), ConstRef::Lit(*d)),
            Constraint::Lower(c, x) => Expr::Lower(ConstRef::Lit(*c), name(x)),
            Constraint::Diagonal {
                left,
                left_offset,
                right,
                right_offset,
            } => Expr::Diagonal {
                left: name(left),
                left_offset: ConstRef::Lit(*left_offset),
                right: name(right),
                right_offset: ConstRef::Lit(*right_offset),
            },
            Constraint::Not(inner) => Expr::Not(Box::new(inner.to_expr(clock_names))),
            Constraint::And(a, b) => Expr::And(
                Box::new(a.to_expr(clock_names)),
                Box::new(b.to_expr(clock_names)),
            ),
        }
    }

    pub fn display<'a>(&'a self, clock_names: &'a [String]) -> ConstraintDisplay<'a> {
        ConstraintDisplay {
            constraint: self,
            clock_names,
        }
    }
}

pub struct ConstraintDisplay<'a> {
    constraint: &'a Constraint,
    clock_names: &'a [String],
}

impl fmt::Display for ConstraintDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constraint.to_expr(self.clock_names))
    }
}

/// Converts a rational to `f64`, saturating on overflow.
pub(crate) fn rational_to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}
