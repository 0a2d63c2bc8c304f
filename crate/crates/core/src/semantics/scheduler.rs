use std::collections::{BTreeSet, VecDeque};
use std::hash::{DefaultHasher, Hash, Hasher};

use num::{BigRational, Zero};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    action_enabled, delay_allowed, delay_bound, enabled_actions, FinitePath, Move, PtaState,
    SemanticsError,
};
use crate::model::{LocationId, Pta, Time};

/// A deterministic scheduler: the next move as a function of the path so far.
/// At even positions it must return a delay, at odd ones an action.
pub trait Scheduler {
    fn decide(&self, pta: &Pta, path: &FinitePath) -> Result<Move, SemanticsError>;
}

fn clip(pta: &Pta, state: &PtaState, wanted: Time) -> Result<Time, SemanticsError> {
    if delay_allowed(pta, state, &wanted)? {
        return Ok(wanted);
    }
    Ok(match delay_bound(pta, state)? {
        Some((sup, true)) => sup,
        Some((sup, false)) if sup > Time::zero() => sup / Time::from_integer(2.into()),
        _ => Time::zero(),
    })
}

fn no_action(path: &FinitePath) -> SemanticsError {
    SemanticsError::SchedulerContract {
        step: path.len(),
        reason: "no action is enabled".into(),
    }
}

/// Delays a fixed amount, clipped to the invariant, then takes the enabled
/// action with the smallest id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedDelay {
    pub delay: Time,
}

impl Scheduler for FixedDelay {
    fn decide(&self, pta: &Pta, path: &FinitePath) -> Result<Move, SemanticsError> {
        let state = path.last();
        if path.len().is_multiple_of(2) {
            return Ok(Move::Delay(clip(pta, state, self.delay.clone())?));
        }
        enabled_actions(pta, state)?
            .first()
            .map(|a| Move::Action(*a))
            .ok_or_else(|| no_action(path))
    }
}

/// Picks an allowed integer delay in `0..=max`, preferring delays after which
/// some action is enabled, and then an enabled action, both pseudo-randomly
/// as a function of the path and the seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformIntegerDelay {
    pub max: u32,
    pub seed: u64,
}

impl UniformIntegerDelay {
    fn rng(&self, path: &FinitePath) -> ChaCha8Rng {
        let mut h = DefaultHasher::new();
        self.seed.hash(&mut h);
        path.states.hash(&mut h);
        path.moves.hash(&mut h);
        ChaCha8Rng::seed_from_u64(h.finish())
    }
}

impl Scheduler for UniformIntegerDelay {
    fn decide(&self, pta: &Pta, path: &FinitePath) -> Result<Move, SemanticsError> {
        let state = path.last();
        let mut rng = self.rng(path);
        if path.len().is_multiple_of(2) {
            let mut options = Vec::new();
            let mut fallback = Vec::new();
            for d in 0..=self.max {
                let t = Time::from_integer(d.into());
                if !delay_allowed(pta, state, &t)? {
                    continue;
                }
                let later = PtaState {
                    location: state.location,
                    valuation: state.valuation.elapse(&t)?,
                };
                if enabled_actions(pta, &later)?.is_empty() {
                    fallback.push(t);
                } else {
                    options.push(t);
                }
            }
            if options.is_empty() {
                options = fallback;
            }
            return match options.choose(&mut rng) {
                Some(t) => Ok(Move::Delay(t.clone())),
                None => Ok(Move::Delay(clip(pta, state, Time::zero())?)),
            };
        }
        enabled_actions(pta, state)?
            .choose(&mut rng)
            .map(|a| Move::Action(*a))
            .ok_or_else(|| no_action(path))
    }
}

/// Waits the least integer time after which some action is enabled, then
/// takes the action whose support comes closest to the targets in the
/// location graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyTowardTarget {
    pub targets: BTreeSet<LocationId>,
    distance: Vec<Option<usize>>,
}

impl GreedyTowardTarget {
    pub fn new(pta: &Pta, targets: BTreeSet<LocationId>) -> Self {
        let n = pta.locations().len();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in pta.edges() {
            for b in e.distribution.branches() {
                preds[b.target.0].push(e.source.0);
            }
        }
        let mut distance = vec![None; n];
        let mut queue = VecDeque::new();
        for t in &targets {
            distance[t.0] = Some(0);
            queue.push_back(t.0);
        }
        while let Some(l) = queue.pop_front() {
            let d = distance[l].expect("queued states have a distance");
            for &p in &preds[l] {
                if distance[p].is_none() {
                    distance[p] = Some(d + 1);
                    queue.push_back(p);
                }
            }
        }
        GreedyTowardTarget { targets, distance }
    }

    pub fn distance(&self, l: LocationId) -> Option<usize> {
        self.distance[l.0]
    }
}

impl Scheduler for GreedyTowardTarget {
    fn decide(&self, pta: &Pta, path: &FinitePath) -> Result<Move, SemanticsError> {
        let state = path.last();
        if path.len().is_multiple_of(2) {
            let limit = pta.max_constant() + 1;
            for d in 0..=limit {
                let t = Time::from_integer(d.into());
                if !delay_allowed(pta, state, &t)? {
                    break;
                }
                let later = PtaState {
                    location: state.location,
                    valuation: state.valuation.elapse(&t)?,
                };
                if !enabled_actions(pta, &later)?.is_empty() {
                    return Ok(Move::Delay(t));
                }
            }
            return Ok(Move::Delay(clip(pta, state, Time::zero())?));
        }
        let mut best = None;
        for a in enabled_actions(pta, state)? {
            let edge = pta.edge(state.location, a).expect("enabled");
            let score = edge
                .distribution
                .branches()
                .iter()
                .map(|b| self.distance[b.target.0].unwrap_or(usize::MAX))
                .min()
                .unwrap_or(usize::MAX);
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, a));
            }
        }
        best.map(|(_, a)| Move::Action(a))
            .ok_or_else(|| no_action(path))
    }
}

/// Uniform draw in `[0, 1)` for the `k`-th move of the run seeded `seed`.
/// Each move reads its own ChaCha stream, so draws do not depend on how
/// much randomness earlier moves consumed.
pub fn draw(seed: u64, k: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng.random::<f64>()
}

/// A path of `moves` moves from the initial state following `scheduler`;
/// probabilistic branches are resolved with [`draw`].
pub fn sample_path<S: Scheduler + ?Sized>(
    pta: &Pta,
    scheduler: &S,
    moves: usize,
    seed: u64,
) -> Result<FinitePath, SemanticsError> {
    let mut path = FinitePath::initial(pta);
    for k in 0..moves {
        let mv = scheduler.decide(pta, &path)?;
        let state = path.last().clone();
        let next = match (&mv, k % 2) {
            (Move::Delay(t), 0) => {
                if !delay_allowed(pta, &state, t)? {
                    return Err(SemanticsError::SchedulerContract {
                        step: k,
                        reason: format!("delay {t} violates the invariant"),
                    });
                }
                PtaState {
                    location: state.location,
                    valuation: state.valuation.elapse(t)?,
                }
            }
            (Move::Action(a), 1) => {
                if !action_enabled(pta, &state, *a)? {
                    return Err(SemanticsError::SchedulerContract {
                        step: k,
                        reason: format!("action `{}` is not enabled", pta.actions()[a.0]),
                    });
                }
                let edge = pta.edge(state.location, *a).expect("enabled");
                let u = BigRational::from_float(draw(seed, k)).unwrap_or_else(BigRational::zero);
                let branches = edge.distribution.branches();
                let mut acc = BigRational::zero();
                let mut chosen = branches.last().expect("non-empty support");
                for b in branches {
                    acc += &b.prob;
                    if u < acc {
                        chosen = b;
                        break;
                    }
                }
                PtaState {
                    location: chosen.target,
                    valuation: state.valuation.reset(chosen.resets)?,
                }
            }
            _ => {
                return Err(SemanticsError::SchedulerContract {
                    step: k,
                    reason: "delays and actions must alternate".into(),
                })
            }
        };
        path.push(mv, next);
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::fig1_pta;
    use crate::semantics::path_weight;

    #[test]
    fn fixed_delay_is_clipped() {
        let pta = fig1_pta();
        let s = FixedDelay {
            delay: Time::from_integer(12.into()),
        };
        let path = sample_path(&pta, &s, 6, 1).unwrap();
        path.validate(&pta).unwrap();
        assert_eq!(path.moves[0], Move::Delay(Time::from_integer(10.into())));
        assert!(path_weight(&pta, &path).unwrap() > BigRational::zero());
    }

    #[test]
    fn sampling_is_reproducible() {
        let pta = fig1_pta();
        let s = UniformIntegerDelay { max: 4, seed: 9 };
        assert_eq!(
            sample_path(&pta, &s, 20, 3).unwrap(),
            sample_path(&pta, &s, 20, 3).unwrap()
        );
    }

    #[test]
    fn greedy_prefers_target() {
        let pta = fig1_pta();
        let wb = pta.location_id("WORK_beta").unwrap();
        let s = GreedyTowardTarget::new(&pta, BTreeSet::from([wb]));
        assert_eq!(s.distance(pta.initial()), Some(1));
        let path = sample_path(&pta, &s, 2, 0).unwrap();
        assert_eq!(path.moves[0], Move::Delay(Time::zero()));
    }

    #[test]
    fn draws_are_uniform_enough() {
        let mean: f64 = (0..2000).map(|k| draw(5, k)).sum::<f64>() / 2000.0;
        assert!((mean - 0.5).abs() < 0.05);
    }
}
