use std::fmt;

use num::{BigRational, Signed, Zero};

use super::{ClockId, ClockSet, ModelError};

/// Clock values and delays are exact rationals.
pub type Time = BigRational;

/// A total map from the clocks of an automaton to nonnegative reals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Valuation(Vec<Time>);

impl Valuation {
    /// The valuation `0`.
    pub fn zero(clocks: usize) -> Self {
        Valuation(vec![Time::zero(); clocks])
    }

    pub fn from_values(values: Vec<Time>) -> Result<Self, ModelError> {
        if let Some(bad) = values.iter().find(|v| v.is_negative()) {
            return Err(ModelError::NegativeClockValue(bad.to_string()));
        }
        Ok(Valuation(values))
    }

    pub fn from_integers(values: &[i64]) -> Result<Self, ModelError> {
        Self::from_values(
            values
                .iter()
                .map(|&v| Time::from_integer(v.into()))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[Time] {
        &self.0
    }

    pub fn get(&self, clock: ClockId) -> Result<&Time, ModelError> {
        self.0.get(clock.0).ok_or(ModelError::UnknownClock(clock.0))
    }

    /// `self[X := 0]`
    pub fn reset(&self, clocks: ClockSet) -> Result<Valuation, ModelError> {
        if let Some(max) = clocks.max_index() {
            if max >= self.0.len() {
                return Err(ModelError::UnknownClock(max));
            }
        }
        let mut out = self.clone();
        for clock in clocks.iter() {
            out.0[clock.0] = Time::zero();
        }
        Ok(out)
    }

    /// `self + t`
    pub fn elapse(&self, delay: &Time) -> Result<Valuation, ModelError> {
        if delay.is_negative() {
            return Err(ModelError::NegativeDelay(delay.to_string()));
        }
        Ok(Valuation(self.0.iter().map(|v| v + delay).collect()))
    }

    /// `self ∪ other`, with `other`'s clocks numbered after `self`'s.
    pub fn concat(&self, other: &Valuation) -> Valuation {
        let mut values = self.0.clone();
        values.extend(other.0.iter().cloned());
        Valuation(values)
    }

    /// Values of clocks `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> Valuation {
        Valuation(self.0[start..start + len].to_vec())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0
            .iter()
            .map(super::constraint::rational_to_f64)
            .collect()
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(n: i64, d: i64) -> Time {
        Time::new(n.into(), d.into())
    }

    #[test]
    fn reset_zeros_exactly_the_given_clocks() {
        let v = Valuation::from_integers(&[3, 1]).unwrap();
        assert_eq!(
            v.reset(ClockSet::singleton(ClockId(0))).unwrap(),
            Valuation::from_integers(&[0, 1]).unwrap()
        );
        assert_eq!(v.reset(ClockSet::empty()).unwrap(), v);
        assert_eq!(v.reset(ClockSet::all(2)).unwrap(), Valuation::zero(2));
        assert!(v.reset(ClockSet::singleton(ClockId(2))).is_err());
    }

    #[test]
    fn elapse_shifts_uniformly() {
        let v = Valuation::from_values(vec![t(3, 2)]).unwrap();
        assert_eq!(v.elapse(&Time::zero()).unwrap(), v);
        assert_eq!(v.elapse(&t(5, 2)).unwrap().values()[0], t(4, 1));
        assert_eq!(
            Valuation::zero(3).elapse(&t(1, 1)).unwrap(),
            Valuation::from_integers(&[1, 1, 1]).unwrap()
        );
        assert!(matches!(
            v.elapse(&t(-1, 2)),
            Err(ModelError::NegativeDelay(_))
        ));
    }

    #[test]
    fn negative_values_rejected() {
        assert!(Valuation::from_values(vec![t(-1, 3)]).is_err());
    }
}
