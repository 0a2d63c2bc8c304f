//! Automata data model: clock constraints, valuations, zones, and the two
//! input automata (probabilistic timed automata and deterministic timed
//! Rabin automata) together with their structural checks.

pub mod constraint;
pub mod dtra;
pub mod expr;
pub mod pta;
pub mod validate;
pub mod valuation;
pub mod zone;

use std::fmt;

use thiserror::Error;

pub use constraint::{ClockScalar, Constraint};
pub use dtra::{Dtra, DtraBuilder, RabinPair, Rule, Symbol};
pub use pta::{Branch, Distribution, Edge, Location, Probability, Pta, PtaBuilder};
pub use valuation::{Time, Valuation};
pub use zone::{Dbm, ZoneSet};

macro_rules! index_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub usize);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0
            }
        }
    };
}

index_type!(
    /// Index of a clock inside its owning automaton.
    ClockId
);
index_type!(LocationId);
index_type!(ActionId);
index_type!(ModeId);
index_type!(
    /// Index of a symbol (a set of atomic propositions) in a DTRA alphabet.
    SymbolId
);

/// A set of clocks, stored as a bitmask. Automata are limited to 64 clocks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClockSet(u64);

pub const MAX_CLOCKS: usize = 64;

impl ClockSet {
    pub const fn empty() -> Self {
        ClockSet(0)
    }

    pub fn all(count: usize) -> Self {
        assert!(
            count <= MAX_CLOCKS,
            "at most {MAX_CLOCKS} clocks are supported"
        );
        if count == MAX_CLOCKS {
            ClockSet(u64::MAX)
        } else {
            ClockSet((1u64 << count) - 1)
        }
    }

    pub fn singleton(clock: ClockId) -> Self {
        let mut set = Self::empty();
        set.insert(clock);
        set
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn from_bits(bits: u64) -> Self {
        ClockSet(bits)
    }

    pub fn insert(&mut self, clock: ClockId) {
        assert!(clock.0 < MAX_CLOCKS, "clock index {} out of range", clock.0);
        self.0 |= 1 << clock.0;
    }

    pub fn contains(self, clock: ClockId) -> bool {
        clock.0 < MAX_CLOCKS && self.0 & (1 << clock.0) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, other: ClockSet) -> ClockSet {
        ClockSet(self.0 | other.0)
    }

    pub fn intersection(self, other: ClockSet) -> ClockSet {
        ClockSet(self.0 & other.0)
    }

    pub fn difference(self, other: ClockSet) -> ClockSet {
        ClockSet(self.0 & !other.0)
    }

    /// Renumbers every member by `offset`, used when clocks of two automata
    /// are laid side by side.
    pub fn shifted(self, offset: usize) -> ClockSet {
        if self.0 == 0 {
            return self;
        }
        assert!(
            64 - self.0.leading_zeros() as usize + offset <= MAX_CLOCKS,
            "shifted clock set exceeds {MAX_CLOCKS} clocks"
        );
        ClockSet(self.0 << offset)
    }

    /// Members with index in `start..start + len`, renumbered from zero.
    pub fn window(self, start: usize, len: usize) -> ClockSet {
        let shifted = if start >= 64 { 0 } else { self.0 >> start };
        let mask = if len >= 64 {
            u64::MAX
        } else {
            (1u64 << len) - 1
        };
        ClockSet(shifted & mask)
    }

    pub fn iter(self) -> impl Iterator<Item = ClockId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let next = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(ClockId(next))
            }
        })
    }

    pub fn max_index(self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            Some(63 - self.0.leading_zeros() as usize)
        }
    }
}

impl FromIterator<ClockId> for ClockSet {
    fn from_iter<I: IntoIterator<Item = ClockId>>(iter: I) -> Self {
        let mut set = ClockSet::empty();
        for clock in iter {
            set.insert(clock);
        }
        set
    }
}

/// Renders a clock set as `{x, y}` given the owning automaton's clock names.
pub struct ClockSetDisplay<'a> {
    pub set: ClockSet,
    pub names: &'a [String],
}

impl fmt::Display for ClockSetDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, clock) in self.set.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match self.names.get(clock.0) {
                Some(name) => f.write_str(name)?,
                None => write!(f, "#{}", clock.0)?,
            }
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown clock #{0}")]
    UnknownClock(usize),
    #[error("unknown clock `{0}`")]
    UnknownClockName(String),
    #[error("negative delay {0}")]
    NegativeDelay(String),
    #[error("negative clock value {0}")]
    NegativeClockValue(String),
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String },
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("distribution of {context} is invalid: {reason}")]
    InvalidDistribution { context: String, reason: String },
    #[error("constraint in {context} mentions clock #{clock} outside the clock set")]
    ForeignClock { context: String, clock: usize },
    #[error("too many clocks: {0} (at most 64)")]
    TooManyClocks(usize),
    #[error("{0}")]
    Invalid(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_set_basics() {
        let mut set = ClockSet::empty();
        set.insert(ClockId(0));
        set.insert(ClockId(3));
        assert_eq!(set.len(), 2);
        assert!(set.contains(ClockId(3)));
        assert!(!set.contains(ClockId(1)));
        assert_eq!(set.iter().collect::<Vec<_>>(), vec![ClockId(0), ClockId(3)]);
        assert_eq!(
            set.shifted(2).iter().collect::<Vec<_>>(),
            vec![ClockId(2), ClockId(5)]
        );
        assert_eq!(set.shifted(2).window(2, 4), set);
        assert_eq!(ClockSet::all(3).len(), 3);
        assert_eq!(ClockSet::all(64).len(), 64);
        assert_eq!(set.max_index(), Some(3));
    }
}
