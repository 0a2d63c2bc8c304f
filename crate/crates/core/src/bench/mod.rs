//! Model generators for the case studies, the constructive reductions, and
//! the digital-clocks oracle used to cross-check the main pipeline.

pub mod digital;
pub mod reductions;
pub mod robot;
pub mod running;
pub mod task;

use std::collections::BTreeMap;

use num::{BigInt, BigRational};
use thiserror::Error;

use crate::model::{Branch, ClockSet, Dtra, LocationId, ModeId, ModelError, Pta};

pub use digital::{digital_clocks_oracle, DigitalError};
pub use reductions::{extend_tra, reachability_reduction, word_pta, WordFollower};
pub use robot::{gen_robot, RobotParams};
pub use running::{fig1_pta, running_dtra, running_example, RunningConstants};
pub use task::{gen_task_completion, TaskParams};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("name `{0}` is already in use")]
    NameCollision(String),
    #[error("grid is disconnected around the obstacles")]
    Disconnected,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A PTA, a DTRA, the mode to start the automaton in, and how they were
/// generated.
#[derive(Debug, Clone)]
pub struct BenchmarkInstance {
    pub family: String,
    pub n: usize,
    pub seed: u64,
    pub params: BTreeMap<String, String>,
    pub pta: Pta,
    pub dtra: Dtra,
    pub mode: ModeId,
}

/// Parses a decimal such as `0.85` into an exact rational.
pub fn decimal(text: &str) -> Option<BigRational> {
    let text = text.trim();
    let (neg, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole
        .chars()
        .chain(frac.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let numer: BigInt = format!("{whole}{frac}").parse().ok()?;
    let denom = num::pow(BigInt::from(10), frac.len());
    let v = BigRational::new(numer, denom);
    Some(if neg { -v } else { v })
}

/// Branches resetting `resets`, dropping zero-probability entries.
pub(crate) fn branches(resets: ClockSet, items: &[(BigRational, LocationId)]) -> Vec<Branch> {
    items
        .iter()
        .filter(|(p, _)| *p > BigRational::from_integer(0.into()))
        .map(|(p, t)| Branch {
            prob: p.clone(),
            resets,
            target: *t,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(decimal("0.1"), Some(BigRational::new(1.into(), 10.into())));
        assert_eq!(decimal("2"), Some(BigRational::from_integer(2.into())));
        assert_eq!(decimal(".25"), Some(BigRational::new(1.into(), 4.into())));
        assert_eq!(decimal("1e3"), None);
        assert_eq!(decimal(""), None);
    }
}
