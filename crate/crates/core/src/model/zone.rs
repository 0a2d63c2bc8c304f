//! Difference bound matrices and finite unions of them.
//!
//! Bounds use the usual packed encoding: `(value << 1) | 1` for `<= value`
//! and `value << 1` for `< value`, with [`INF`] for "no bound". Index 0 is
//! the reference clock; model clock `x` lives at index `x + 1`.

use std::fmt;

use num::{BigInt, BigRational, Zero};

use super::constraint::Constraint;
use super::valuation::{Time, Valuation};
use super::{ClockSet, ModelError};

pub type Bound = i64;

pub const INF: Bound = i64::MAX;

pub const LE_ZERO: Bound = 1;

pub fn bound(value: i64, weak: bool) -> Bound {
    (value << 1) | weak as i64
}

pub fn bound_value(b: Bound) -> i64 {
    b >> 1
}

pub fn bound_is_weak(b: Bound) -> bool {
    b & 1 == 1
}

fn add(a: Bound, b: Bound) -> Bound {
    if a == INF || b == INF {
        INF
    } else {
        ((bound_value(a) + bound_value(b)) << 1) | (a & b & 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dbm {
    dim: usize,
    m: Vec<Bound>,
}

/// The set of delays `tau >= 0` keeping a valuation inside a zone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayInterval {
    pub lo: Time,
    pub lo_strict: bool,
    /// `None` when unbounded.
    pub hi: Option<Time>,
    pub hi_strict: bool,
}

impl DelayInterval {
    pub fn contains(&self, tau: &Time) -> bool {
        let above = if self.lo_strict {
            *tau > self.lo
        } else {
            *tau >= self.lo
        };
        let below = match &self.hi {
            None => true,
            Some(hi) if self.hi_strict => tau < hi,
            Some(hi) => tau <= hi,
        };
        above && below
    }

    pub fn is_empty(&self) -> bool {
        match &self.hi {
            None => false,
            Some(hi) => {
                if self.lo_strict || self.hi_strict {
                    *hi <= self.lo
                } else {
                    *hi < self.lo
                }
            }
        }
    }
}

impl Dbm {
    /// All nonnegative valuations of `clocks` clocks.
    pub fn universal(clocks: usize) -> Self {
        let dim = clocks + 1;
        let mut m = vec![INF; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = LE_ZERO;
            m[i] = LE_ZERO;
        }
        Dbm { dim, m }
    }

    /// The single valuation `0`.
    pub fn zero(clocks: usize) -> Self {
        let dim = clocks + 1;
        Dbm {
            dim,
            m: vec![LE_ZERO; dim * dim],
        }
    }

    pub fn clocks(&self) -> usize {
        self.dim - 1
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Bound {
        self.m[i * self.dim + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, b: Bound) {
        self.m[i * self.dim + j] = b;
    }

    /// Tightens `x_i - x_j` by `b` without re-closing.
    pub fn tighten(&mut self, i: usize, j: usize, b: Bound) {
        if b < self.get(i, j) {
            self.set(i, j, b);
        }
    }

    /// Floyd-Warshall closure.
    pub fn close(&mut self) {
        let n = self.dim;
        for k in 0..n {
            for i in 0..n {
                let ik = self.m[i * n + k];
                if ik == INF {
                    continue;
                }
                for j in 0..n {
                    let via = add(ik, self.m[k * n + j]);
                    if via < self.m[i * n + j] {
                        self.m[i * n + j] = via;
                    }
                }
            }
        }
    }

    /// Only meaningful on closed matrices.
    pub fn is_empty(&self) -> bool {
        (0..self.dim).any(|i| self.get(i, i) < LE_ZERO)
    }

    pub fn intersect(&self, other: &Dbm) -> Dbm {
        assert_eq!(self.dim, other.dim);
        let mut out = Dbm {
            dim: self.dim,
            m: self
                .m
                .iter()
                .zip(&other.m)
                .map(|(a, b)| *a.min(b))
                .collect(),
        };
        out.close();
        out
    }

    /// `Z[X := 0]`
    pub fn reset(&self, clocks: ClockSet) -> Dbm {
        let mut out = self.clone();
        for x in clocks.iter() {
            let k = x.0 + 1;
            for j in 0..self.dim {
                let b0j = out.get(0, j);
                let bj0 = out.get(j, 0);
                out.set(k, j, b0j);
                out.set(j, k, bj0);
            }
            out.set(k, k, LE_ZERO);
            out.set(k, 0, LE_ZERO);
            out.set(0, k, LE_ZERO);
        }
        out.close();
        out
    }

    /// Time successors of the zone.
    pub fn up(&self) -> Dbm {
        let mut out = self.clone();
        for i in 1..self.dim {
            out.set(i, 0, INF);
        }
        out
    }

    /// Inclusion `other ⊆ self` for closed, non-empty matrices.
    pub fn includes(&self, other: &Dbm) -> bool {
        self.m.iter().zip(&other.m).all(|(a, b)| a >= b)
    }

    pub fn contains(&self, valuation: &Valuation) -> bool {
        let v = valuation.values();
        let value = |i: usize| {
            if i == 0 {
                Time::zero()
            } else {
                v[i - 1].clone()
            }
        };
        for i in 0..self.dim {
            for j in 0..self.dim {
                let b = self.get(i, j);
                if i == j || b == INF {
                    continue;
                }
                let diff = value(i) - value(j);
                let c = Time::from_integer(BigInt::from(bound_value(b)));
                if (bound_is_weak(b) && diff > c) || (!bound_is_weak(b) && diff >= c) {
                    return false;
                }
            }
        }
        true
    }

    /// Delays `tau >= 0` with `valuation + tau` inside the zone.
    pub fn delay_interval(&self, valuation: &Valuation) -> Option<DelayInterval> {
        let v = valuation.values();
        let mut out = DelayInterval {
            lo: Time::zero(),
            lo_strict: false,
            hi: None,
            hi_strict: false,
        };
        for i in 0..self.dim {
            for j in 0..self.dim {
                let b = self.get(i, j);
                if i == j || b == INF {
                    continue;
                }
                let c = Time::from_integer(BigInt::from(bound_value(b)));
                let strict = !bound_is_weak(b);
                match (i, j) {
                    (0, j) => {
                        // -(v_j + tau) <= c  =>  tau >= -c - v_j
                        let lo = -c - &v[j - 1];
                        if lo > out.lo || (lo == out.lo && strict) {
                            out.lo = lo;
                            out.lo_strict = strict;
                        }
                    }
                    (i, 0) => {
                        let hi = c - &v[i - 1];
                        let tighter = match &out.hi {
                            None => true,
                            Some(cur) => hi < *cur || (hi == *cur && strict),
                        };
                        if tighter {
                            out.hi = Some(hi);
                            out.hi_strict = strict;
                        }
                    }
                    (i, j) => {
                        let diff = &v[i - 1] - &v[j - 1];
                        if (strict && diff >= c) || (!strict && diff > c) {
                            return None;
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            None
        } else {
            Some(out)
        }
    }

    /// Some valuation inside a closed, non-empty zone.
    pub fn witness(&self) -> Option<Valuation> {
        if self.is_empty() {
            return None;
        }
        let mut work = self.clone();
        let mut scale: i64 = 1;
        for k in 1..self.dim {
            let lower = work.get(0, k);
            let lo = -bound_value(lower);
            let v = if bound_is_weak(lower) {
                lo
            } else {
                // strictly above lo: halve the grid so lo + 1/2 is representable
                for b in work.m.iter_mut() {
                    if *b != INF {
                        *b = bound(bound_value(*b) * 2, bound_is_weak(*b));
                    }
                }
                scale *= 2;
                2 * lo + 1
            };
            work.tighten(k, 0, bound(v, true));
            work.tighten(0, k, bound(-v, true));
            work.close();
            debug_assert!(!work.is_empty());
        }
        let denom = BigInt::from(scale);
        let values = (1..self.dim)
            .map(|k| BigRational::new(BigInt::from(bound_value(work.get(k, 0))), denom.clone()))
            .collect();
        Valuation::from_values(values).ok()
    }
}

impl fmt::Display for Dbm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            for j in 0..self.dim {
                let b = self.get(i, j);
                if j > 0 {
                    f.write_str(" ")?;
                }
                if b == INF {
                    f.write_str("inf")?;
                } else {
                    let op = if bound_is_weak(b) { "<=" } else { "<" };
                    write!(f, "{op}{}", bound_value(b))?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// A finite union of zones over a fixed number of clocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZoneSet {
    clocks: usize,
    zones: Vec<Dbm>,
}

impl ZoneSet {
    pub fn empty(clocks: usize) -> Self {
        ZoneSet {
            clocks,
            zones: Vec::new(),
        }
    }

    pub fn universal(clocks: usize) -> Self {
        ZoneSet {
            clocks,
            zones: vec![Dbm::universal(clocks)],
        }
    }

    pub fn from_dbm(dbm: Dbm) -> Self {
        let mut out = ZoneSet::empty(dbm.clocks());
        out.push(dbm);
        out
    }

    /// The valuations satisfying `constraint`.
    pub fn from_constraint(constraint: &Constraint, clocks: usize) -> Result<Self, ModelError> {
        if let Some(max) = constraint.clocks().max_index() {
            if max >= clocks {
                return Err(ModelError::UnknownClock(max));
            }
        }
        let mut out = ZoneSet {
            clocks,
            zones: dnf(constraint, true, clocks),
        };
        out.normalize();
        Ok(out)
    }

    pub fn clocks(&self) -> usize {
        self.clocks
    }

    pub fn zones(&self) -> &[Dbm] {
        &self.zones
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    fn push(&mut self, dbm: Dbm) {
        if !dbm.is_empty() {
            self.zones.push(dbm);
        }
    }

    /// Drops empty and subsumed members.
    pub fn normalize(&mut self) {
        let zones = std::mem::take(&mut self.zones);
        let mut kept: Vec<Dbm> = Vec::with_capacity(zones.len());
        for z in zones.into_iter().filter(|z| !z.is_empty()) {
            if kept.iter().any(|k| k.includes(&z)) {
                continue;
            }
            kept.retain(|k| !z.includes(k));
            kept.push(z);
        }
        self.zones = kept;
    }

    pub fn intersect(&self, other: &ZoneSet) -> ZoneSet {
        let mut out = ZoneSet::empty(self.clocks);
        for a in &self.zones {
            for b in &other.zones {
                out.push(a.intersect(b));
            }
        }
        out.normalize();
        out
    }

    pub fn union(&self, other: &ZoneSet) -> ZoneSet {
        let mut out = self.clone();
        out.zones.extend(other.zones.iter().cloned());
        out.normalize();
        out
    }

    pub fn reset(&self, clocks: ClockSet) -> ZoneSet {
        let mut out = ZoneSet::empty(self.clocks);
        for z in &self.zones {
            out.push(z.reset(clocks));
        }
        out.normalize();
        out
    }

    pub fn up(&self) -> ZoneSet {
        let mut out = ZoneSet::empty(self.clocks);
        for z in &self.zones {
            out.push(z.up());
        }
        out.normalize();
        out
    }

    pub fn contains(&self, valuation: &Valuation) -> bool {
        self.zones.iter().any(|z| z.contains(valuation))
    }

    pub fn witness(&self) -> Option<Valuation> {
        self.zones.iter().find_map(Dbm::witness)
    }
}

fn atom_dbm(atom: &Constraint, positive: bool, clocks: usize) -> Dbm {
    let mut d = Dbm::universal(clocks);
    let c = |v: u32| i64::from(v);
    match (atom, positive) {
        (Constraint::Upper(x, v), true) => d.tighten(x.0 + 1, 0, bound(c(*v), true)),
        (Constraint::Upper(x, v), false) => d.tighten(0, x.0 + 1, bound(-c(*v), false)),
        (Constraint::Lower(v, x), true) => d.tighten(0, x.0 + 1, bound(-c(*v), true)),
        (Constraint::Lower(v, x), false) => d.tighten(x.0 + 1, 0, bound(c(*v), false)),
        (
            Constraint::Diagonal {
                left,
                left_offset,
                right,
                right_offset,
            },
            true,
        ) => d.tighten(
            left.0 + 1,
            right.0 + 1,
            bound(c(*right_offset) - c(*left_offset), true),
        ),
        (
            Constraint::Diagonal {
                left,
                left_offset,
                right,
                right_offset,
            },
            false,
        ) => d.tighten(
            right.0 + 1,
            left.0 + 1,
            bound(c(*left_offset) - c(*right_offset), false),
        ),
        _ => unreachable!("not an atom"),
    }
    d.close();
    d
}

fn dnf(c: &Constraint, positive: bool, clocks: usize) -> Vec<Dbm> {
    match c {
        Constraint::True => {
            if positive {
                vec![Dbm::universal(clocks)]
            } else {
                Vec::new()
            }
        }
        Constraint::Not(inner) => dnf(inner, !positive, clocks),
        Constraint::And(a, b) if positive => {
            let left = dnf(a, true, clocks);
            if left.is_empty() {
                return left;
            }
            let right = dnf(b, true, clocks);
            let mut out = ZoneSet::empty(clocks);
            for l in &left {
                for r in &right {
                    out.push(l.intersect(r));
                }
            }
            out.normalize();
            out.zones
        }
        Constraint::And(a, b) => {
            let mut out = ZoneSet {
                clocks,
                zones: dnf(a, false, clocks),
            };
            out.zones.extend(dnf(b, false, clocks));
            out.normalize();
            out.zones
        }
        atom => {
            let d = atom_dbm(atom, positive, clocks);
            if d.is_empty() {
                Vec::new()
            } else {
                vec![d]
            }
        }
    }
}

/// Whether some valuation over `clocks` clocks satisfies `constraint`.
pub fn satisfiable(constraint: &Constraint, clocks: usize) -> Result<bool, ModelError> {
    Ok(!ZoneSet::from_constraint(constraint, clocks)?.is_empty())
}

/// Whether two constraints define the same set of valuations.
pub fn equivalent(a: &Constraint, b: &Constraint, clocks: usize) -> Result<bool, ModelError> {
    let a_not_b = a.clone().and(b.clone().negate());
    let b_not_a = b.clone().and(a.clone().negate());
    Ok(!satisfiable(&a_not_b, clocks)? && !satisfiable(&b_not_a, clocks)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClockId;

    const X: ClockId = ClockId(0);
    const Y: ClockId = ClockId(1);

    fn val(values: &[(i64, i64)]) -> Valuation {
        Valuation::from_values(
            values
                .iter()
                .map(|&(n, d)| BigRational::new(n.into(), d.into()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn strict_interval_has_rational_witness() {
        // 1 < x < 2
        let c = Constraint::strict_lower(1, X).and(Constraint::strict_upper(X, 2));
        let zones = ZoneSet::from_constraint(&c, 1).unwrap();
        let w = zones.witness().unwrap();
        assert!(c.eval(&w).unwrap());
        assert_eq!(w, val(&[(3, 2)]));
    }

    #[test]
    fn contradictions_are_empty() {
        let c = Constraint::lower(3, X).and(Constraint::upper(X, 2));
        assert!(!satisfiable(&c, 1).unwrap());
        let c = Constraint::diagonal(X, 1, Y, 0).and(Constraint::diagonal(Y, 0, X, 0));
        assert!(!satisfiable(&c, 2).unwrap());
        assert!(!satisfiable(&Constraint::falsum(), 0).unwrap());
        assert!(satisfiable(&Constraint::True, 0).unwrap());
    }

    #[test]
    fn negated_conjunction_splits() {
        let c = Constraint::upper(X, 1)
            .and(Constraint::upper(Y, 1))
            .negate();
        let zones = ZoneSet::from_constraint(&c, 2).unwrap();
        assert_eq!(zones.zones().len(), 2);
        assert!(zones.contains(&val(&[(2, 1), (0, 1)])));
        assert!(!zones.contains(&val(&[(1, 1), (1, 1)])));
    }

    #[test]
    fn reset_and_up() {
        let c = Constraint::equals(X, 3).and(Constraint::equals(Y, 5));
        let z = ZoneSet::from_constraint(&c, 2)
            .unwrap()
            .reset(ClockSet::singleton(X));
        assert!(z.contains(&val(&[(0, 1), (5, 1)])));
        let up = z.up();
        assert!(up.contains(&val(&[(2, 1), (7, 1)])));
        assert!(!up.contains(&val(&[(2, 1), (6, 1)])));
    }

    #[test]
    fn delay_interval_bounds() {
        // 2 <= x < 5 from x = 1: tau in [1, 4)
        let c = Constraint::lower(2, X).and(Constraint::strict_upper(X, 5));
        let zs = ZoneSet::from_constraint(&c, 1).unwrap();
        let z = &zs.zones()[0];
        let iv = z.delay_interval(&val(&[(1, 1)])).unwrap();
        assert_eq!(iv.lo, val(&[(1, 1)]).values()[0]);
        assert!(!iv.lo_strict);
        assert!(iv.hi_strict);
        assert!(iv.contains(&BigRational::new(7.into(), 2.into())));
        assert!(!iv.contains(&BigRational::from_integer(4.into())));
    }

    #[test]
    fn equivalence() {
        let a = Constraint::upper(X, 3).negate();
        let b = Constraint::strict_lower(3, X);
        assert!(equivalent(&a, &b, 1).unwrap());
        assert!(!equivalent(&a, &Constraint::lower(3, X), 1).unwrap());
    }
}
