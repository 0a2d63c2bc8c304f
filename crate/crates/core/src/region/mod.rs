//! Clock regions and the region MDP of a PTA.

mod build;

use std::fmt;

use num::{BigInt, BigRational, Zero};
use thiserror::Error;

use crate::model::{ClockSet, Constraint, Pta, Valuation};

pub use build::{active_clocks, build_region_mdp, RegionMdp, RegionOptions, DEADLOCK, DELAY};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegionError {
    #[error("unsupported diagonal constraint `{0}`; the region engine is diagonal-free")]
    UnsupportedConstraint(String),
    #[error("constant {constant} on clock #{clock} exceeds its ceiling {ceiling}")]
    ConstantAboveCeiling {
        clock: usize,
        constant: u32,
        ceiling: u32,
    },
    #[error("ceiling {0} is too large")]
    CeilingTooLarge(u32),
    #[error("location `{location}` is entered outside its invariant via `{action}`")]
    NotWellFormed { location: String, action: String },
    #[error("initial state violates the invariant of `{0}`")]
    InitialInvariant(String),
    #[error("region MDP exceeds {0} states")]
    TooManyStates(usize),
}

/// Per-clock maximal constants.
pub type Ceilings = Vec<u16>;

/// The maximal constant of all invariants and guards of `pta`.
pub fn ceiling_of(pta: &Pta) -> u32 {
    pta.max_constant()
}

/// Maximal constant per clock; clocks never compared get 0.
pub fn clock_ceilings(pta: &Pta) -> Result<Ceilings, RegionError> {
    let mut per = vec![0u32; pta.clock_count()];
    for c in pta.constraints() {
        c.max_constant_per_clock(&mut per);
    }
    per.into_iter()
        .map(|c| {
            u16::try_from(c)
                .ok()
                .filter(|c| *c < u16::MAX)
                .ok_or(RegionError::CeilingTooLarge(c))
        })
        .collect()
}

pub fn uniform_ceilings(clocks: usize, ceiling: u32) -> Result<Ceilings, RegionError> {
    let c = u16::try_from(ceiling)
        .ok()
        .filter(|c| *c < u16::MAX)
        .ok_or(RegionError::CeilingTooLarge(ceiling))?;
    Ok(vec![c; clocks])
}

/// A clock region: integer parts (with `ceiling + 1` standing for "above
/// the ceiling") and the order of fractional parts. Rank 0 marks a zero
/// fractional part; positive ranks are dense and ordered like the
/// fractional parts. Clocks above their ceiling always have rank 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    ints: Vec<u16>,
    ranks: Vec<u16>,
}

impl Region {
    pub fn zero(clocks: usize) -> Self {
        Region {
            ints: vec![0; clocks],
            ranks: vec![0; clocks],
        }
    }

    pub fn clocks(&self) -> usize {
        self.ints.len()
    }

    pub fn ints(&self) -> &[u16] {
        &self.ints
    }

    pub fn ranks(&self) -> &[u16] {
        &self.ranks
    }

    pub fn is_above(&self, x: usize, ceilings: &[u16]) -> bool {
        self.ints[x] > ceilings[x]
    }

    fn max_rank(&self) -> u16 {
        self.ranks.iter().copied().max().unwrap_or(0)
    }

    /// The region containing `valuation`.
    pub fn of(valuation: &Valuation, ceilings: &[u16]) -> Region {
        let n = valuation.len();
        let mut ints = vec![0u16; n];
        let mut fracs: Vec<(usize, BigRational)> = Vec::new();
        for (x, v) in valuation.values().iter().enumerate() {
            let c = ceilings[x];
            let floor = v.floor();
            let int = floor.to_integer();
            if *v > BigRational::from_integer(BigInt::from(c)) {
                ints[x] = c + 1;
                continue;
            }
            ints[x] = u16::try_from(int).expect("bounded by ceiling");
            let frac = v - floor;
            if !frac.is_zero() {
                fracs.push((x, frac));
            }
        }
        fracs.sort_by(|a, b| a.1.cmp(&b.1));
        let mut ranks = vec![0u16; n];
        let mut rank = 0u16;
        let mut last: Option<&BigRational> = None;
        for (x, f) in &fracs {
            if last != Some(f) {
                rank += 1;
                last = Some(f);
            }
            ranks[*x] = rank;
        }
        Region { ints, ranks }
    }

    /// Renumbers positive ranks densely.
    fn densify(&mut self) {
        let mut used: Vec<u16> = self.ranks.iter().copied().filter(|r| *r > 0).collect();
        used.sort_unstable();
        used.dedup();
        for r in self.ranks.iter_mut() {
            if *r > 0 {
                *r = used.binary_search(r).expect("present") as u16 + 1;
            }
        }
    }

    /// The immediate time successor; a fixpoint once every clock is above
    /// its ceiling.
    pub fn delay_successor(&self, ceilings: &[u16]) -> Region {
        let n = self.clocks();
        let mut out = self.clone();
        let on_integer: Vec<usize> = (0..n)
            .filter(|&x| !self.is_above(x, ceilings) && self.ranks[x] == 0)
            .collect();
        if !on_integer.is_empty() {
            for r in out.ranks.iter_mut() {
                if *r > 0 {
                    *r += 1;
                }
            }
            for x in on_integer {
                if self.ints[x] == ceilings[x] {
                    out.ints[x] = ceilings[x] + 1;
                    out.ranks[x] = 0;
                } else {
                    out.ranks[x] = 1;
                }
            }
            out.densify();
            return out;
        }
        let top = self.max_rank();
        if top == 0 {
            return out;
        }
        for x in 0..n {
            if self.ranks[x] == top {
                out.ints[x] += 1;
                out.ranks[x] = 0;
            }
        }
        out
    }

    /// The region of `v[X := 0]` for `v` in this region.
    pub fn reset(&self, clocks: ClockSet) -> Region {
        let mut out = self.clone();
        for x in clocks.iter() {
            out.ints[x.0] = 0;
            out.ranks[x.0] = 0;
        }
        out.densify();
        out
    }

    /// Sends `clocks` above their ceilings.
    pub fn forget(&mut self, clocks: ClockSet, ceilings: &[u16]) {
        if clocks.is_empty() {
            return;
        }
        for x in clocks.iter() {
            self.ints[x.0] = ceilings[x.0] + 1;
            self.ranks[x.0] = 0;
        }
        self.densify();
    }

    /// Whether every valuation of the region satisfies `c`.
    pub fn satisfies(&self, c: &Constraint, ceilings: &[u16]) -> Result<bool, RegionError> {
        Ok(match c {
            Constraint::True => true,
            Constraint::Upper(x, d) => {
                let x = x.0;
                check_constant(x, *d, ceilings)?;
                if self.is_above(x, ceilings) {
                    false
                } else if self.ranks[x] == 0 {
                    u32::from(self.ints[x]) <= *d
                } else {
                    u32::from(self.ints[x]) < *d
                }
            }
            Constraint::Lower(k, x) => {
                let x = x.0;
                check_constant(x, *k, ceilings)?;
                self.is_above(x, ceilings) || u32::from(self.ints[x]) >= *k
            }
            Constraint::Diagonal { .. } => {
                return Err(RegionError::UnsupportedConstraint(
                    c.display(&[]).to_string(),
                ))
            }
            Constraint::Not(inner) => !self.satisfies(inner, ceilings)?,
            Constraint::And(a, b) => self.satisfies(a, ceilings)? && self.satisfies(b, ceilings)?,
        })
    }

    /// A rational point inside the region.
    pub fn sample(&self, ceilings: &[u16]) -> Valuation {
        let k = self.max_rank();
        let denom = BigInt::from(k + 1);
        let values = (0..self.clocks())
            .map(|x| {
                if self.is_above(x, ceilings) {
                    BigRational::from_integer(BigInt::from(ceilings[x] + 1))
                } else {
                    BigRational::from_integer(BigInt::from(self.ints[x]))
                        + BigRational::new(BigInt::from(self.ranks[x]), denom.clone())
                }
            })
            .collect();
        Valuation::from_values(values).expect("nonnegative")
    }

    /// Every region over `ceilings.len()` clocks.
    pub fn enumerate(ceilings: &[u16]) -> Vec<Region> {
        let n = ceilings.len();
        let mut out = Vec::new();
        let mut ints = vec![0u16; n];
        loop {
            // clocks strictly below their ceiling may have a fractional part
            let inside: Vec<usize> = (0..n).filter(|&x| ints[x] < ceilings[x]).collect();
            let m = inside.len();
            let mut ranks = vec![0u16; m];
            loop {
                let max = ranks.iter().copied().max().unwrap_or(0);
                let dense = (1..=max).all(|r| ranks.contains(&r));
                if dense {
                    let mut full = vec![0u16; n];
                    for (i, &x) in inside.iter().enumerate() {
                        full[x] = ranks[i];
                    }
                    out.push(Region {
                        ints: ints.clone(),
                        ranks: full,
                    });
                }
                // next rank vector in base (m + 1)
                let mut i = 0;
                while i < m {
                    if (ranks[i] as usize) < m {
                        ranks[i] += 1;
                        break;
                    }
                    ranks[i] = 0;
                    i += 1;
                }
                if i == m {
                    break;
                }
            }
            let mut i = 0;
            while i < n {
                if ints[i] <= ceilings[i] {
                    ints[i] += 1;
                    break;
                }
                ints[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
        out
    }

    pub fn display<'a>(&'a self, names: &'a [String], ceilings: &'a [u16]) -> RegionDisplay<'a> {
        RegionDisplay {
            region: self,
            names,
            ceilings,
        }
    }
}

fn check_constant(x: usize, k: u32, ceilings: &[u16]) -> Result<(), RegionError> {
    if k > u32::from(ceilings[x]) {
        Err(RegionError::ConstantAboveCeiling {
            clock: x,
            constant: k,
            ceiling: u32::from(ceilings[x]),
        })
    } else {
        Ok(())
    }
}

/// `x=1, 0<y<1, ...` with fractional order as `frac(y)<frac(z)`.
pub struct RegionDisplay<'a> {
    region: &'a Region,
    names: &'a [String],
    ceilings: &'a [u16],
}

impl fmt::Display for RegionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.region;
        let name = |x: usize| {
            self.names
                .get(x)
                .cloned()
                .unwrap_or_else(|| format!("#{x}"))
        };
        let mut parts = Vec::new();
        for x in 0..r.clocks() {
            let i = r.ints[x];
            if r.is_above(x, self.ceilings) {
                parts.push(format!("{}>{}", name(x), self.ceilings[x]));
            } else if r.ranks[x] == 0 {
                parts.push(format!("{}={}", name(x), i));
            } else {
                parts.push(format!("{}<{}<{}", i, name(x), i + 1));
            }
        }
        let mut fractional: Vec<usize> = (0..r.clocks()).filter(|&x| r.ranks[x] > 0).collect();
        fractional.sort_by_key(|&x| r.ranks[x]);
        let mut order = String::new();
        for (k, &x) in fractional.iter().enumerate() {
            if k > 0 {
                let sep = if r.ranks[x] == r.ranks[fractional[k - 1]] {
                    "="
                } else {
                    "<"
                };
                order.push_str(sep);
            }
            order.push_str(&name(x));
        }
        write!(f, "[{}", parts.join(","))?;
        if fractional.len() > 1 {
            write!(f, "; {order}")?;
        }
        f.write_str("]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClockId;

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
    fn region_of_orders_fractions() {
        let c = [1, 1];
        let r = Region::of(&val(&[(3, 10), (7, 10)]), &c);
        assert_eq!(r.ints(), &[0, 0]);
        assert_eq!(r.ranks(), &[1, 2]);
        let s = Region::of(&val(&[(1, 2), (1, 2)]), &c);
        assert_ne!(r, s);
        let above = Region::of(&val(&[(7, 1)]), &[5]);
        assert!(above.is_above(0, &[5]));
    }

    #[test]
    fn successor_chain_one_clock() {
        let c = [2];
        let r = Region::of(&val(&[(1, 1)]), &c);
        let next = r.delay_successor(&c);
        assert_eq!(next, Region::of(&val(&[(3, 2)]), &c));
        let top = Region::of(&val(&[(9, 1)]), &c);
        assert_eq!(top.delay_successor(&c), top);
    }

    #[test]
    fn max_fraction_moves_first() {
        let c = [1, 1];
        // 0 < x < 1 with y = 0 after a reset of y: frac(y) = 0 < frac(x)
        let r = Region::of(&val(&[(1, 2), (0, 1)]), &c);
        let next = r.delay_successor(&c);
        assert_eq!(next, Region::of(&val(&[(3, 5), (1, 10)]), &c));
        let next = next.delay_successor(&c);
        assert_eq!(next, Region::of(&val(&[(1, 1), (1, 2)]), &c));
    }

    #[test]
    fn one_clock_region_count() {
        for m in 0..=5u16 {
            assert_eq!(Region::enumerate(&[m]).len(), 2 * m as usize + 2);
        }
    }

    #[test]
    fn satisfaction() {
        let c = [2];
        let r = Region::of(&val(&[(3, 2)]), &c);
        assert!(r.satisfies(&Constraint::upper(ClockId(0), 2), &c).unwrap());
        assert!(!r.satisfies(&Constraint::upper(ClockId(0), 1), &c).unwrap());
        let above = Region::of(&val(&[(5, 1)]), &c);
        assert!(above
            .satisfies(&Constraint::lower(2, ClockId(0)), &c)
            .unwrap());
        let diag = Constraint::diagonal(ClockId(0), 0, ClockId(0), 1);
        assert!(matches!(
            r.satisfies(&diag, &c),
            Err(RegionError::UnsupportedConstraint(_))
        ));
    }
}
