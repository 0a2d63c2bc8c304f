//! Concrete semantics: states and finite paths of a PTA, timed words, runs of
//! a DTRA, lasso acceptance, schedulers, sampling and the path transformation
//! into the product.

pub mod scheduler;
pub mod transform;

use std::collections::{BTreeSet, HashMap};

use num::{BigRational, One, Zero};
use thiserror::Error;

use crate::model::{
    ActionId, Dtra, LocationId, ModeId, ModelError, Probability, Pta, RabinPair, Symbol, Time,
    Valuation, ZoneSet,
};

pub use scheduler::{sample_path, FixedDelay, GreedyTowardTarget, Scheduler, UniformIntegerDelay};
pub use transform::{project_path, transform_path, ThetaScheduler};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("malformed path: {0}")]
    Malformed(String),
    #[error("automaton is stuck in mode `{mode}` reading {symbol} at {valuation}")]
    Stuck {
        mode: String,
        symbol: String,
        valuation: String,
    },
    #[error("not a lasso: {0}")]
    NotLasso(String),
    #[error("automaton configuration did not repeat within {0} cycle iterations")]
    NoRepetition(usize),
    #[error("scheduler broke its contract at step {step}: {reason}")]
    SchedulerContract { step: usize, reason: String },
    #[error("product path has no preimage: {0}")]
    InverseLookup(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PtaState {
    pub location: LocationId,
    pub valuation: Valuation,
}

impl PtaState {
    pub fn initial(pta: &Pta) -> Self {
        PtaState {
            location: pta.initial(),
            valuation: Valuation::zero(pta.clock_count()),
        }
    }
}

/// A path label: a delay at even positions, an action at odd ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Move {
    Delay(Time),
    Action(ActionId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePath {
    pub states: Vec<PtaState>,
    pub moves: Vec<Move>,
}

impl FinitePath {
    pub fn new(start: PtaState) -> Self {
        FinitePath {
            states: vec![start],
            moves: Vec::new(),
        }
    }

    pub fn initial(pta: &Pta) -> Self {
        Self::new(PtaState::initial(pta))
    }

    /// Number of moves.
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn last(&self) -> &PtaState {
        self.states.last().expect("paths have a first state")
    }

    pub fn push(&mut self, mv: Move, state: PtaState) {
        self.moves.push(mv);
        self.states.push(state);
    }

    /// Checks the delay/action alternation.
    pub fn check_alternation(&self) -> Result<(), SemanticsError> {
        if self.states.len() != self.moves.len() + 1 {
            return Err(SemanticsError::Malformed(format!(
                "{} states for {} moves",
                self.states.len(),
                self.moves.len()
            )));
        }
        for (i, mv) in self.moves.iter().enumerate() {
            match (i % 2, mv) {
                (0, Move::Delay(_)) | (1, Move::Action(_)) => {}
                (0, _) => {
                    return Err(SemanticsError::Malformed(format!(
                        "move {i} must be a delay"
                    )))
                }
                _ => {
                    return Err(SemanticsError::Malformed(format!(
                        "move {i} must be an action"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Checks alternation and that every move has positive probability.
    pub fn validate(&self, pta: &Pta) -> Result<(), SemanticsError> {
        self.check_alternation()?;
        if self.states[0].location != pta.initial()
            || self.states[0].valuation != Valuation::zero(pta.clock_count())
        {
            return Err(SemanticsError::Malformed(
                "path does not start in the initial state".into(),
            ));
        }
        for i in 0..self.moves.len() {
            if transition_prob(pta, &self.states[i], &self.moves[i], &self.states[i + 1])?.is_zero()
            {
                return Err(SemanticsError::Malformed(format!(
                    "move {i} cannot lead to the next state"
                )));
            }
        }
        Ok(())
    }
}

/// Supremum of the delays allowed by the invariant at `state`, and whether it
/// is attained. `None` when every delay is allowed.
pub fn delay_bound(pta: &Pta, state: &PtaState) -> Result<Option<(Time, bool)>, SemanticsError> {
    let inv = ZoneSet::from_constraint(pta.invariant(state.location), pta.clock_count())?;
    let intervals: Vec<_> = inv
        .zones()
        .iter()
        .filter_map(|z| z.delay_interval(&state.valuation))
        .collect();
    let zero = Time::zero();
    if !intervals.iter().any(|i| i.contains(&zero)) {
        return Ok(Some((zero, false)));
    }
    let mut reach = zero;
    let mut closed = true;
    loop {
        let mut grew = false;
        for i in &intervals {
            let touches = i.lo < reach || (i.lo == reach && (closed || !i.lo_strict));
            if !touches {
                continue;
            }
            match &i.hi {
                None => return Ok(None),
                Some(hi) => {
                    if *hi > reach || (*hi == reach && !closed && !i.hi_strict) {
                        reach = hi.clone();
                        closed = !i.hi_strict;
                        grew = true;
                    }
                }
            }
        }
        if !grew {
            return Ok(Some((reach, closed)));
        }
    }
}

/// Whether the invariant holds throughout `[0, t]` from `state`.
pub fn delay_allowed(pta: &Pta, state: &PtaState, t: &Time) -> Result<bool, SemanticsError> {
    if *t < Time::zero() {
        return Ok(false);
    }
    Ok(match delay_bound(pta, state)? {
        None => true,
        Some((sup, closed)) => *t < sup || (closed && *t == sup),
    })
}

/// Whether `action` is enabled at `state`.
pub fn action_enabled(
    pta: &Pta,
    state: &PtaState,
    action: ActionId,
) -> Result<bool, SemanticsError> {
    match pta.edge(state.location, action) {
        None => Ok(false),
        Some(e) => Ok(e.guard.eval(&state.valuation)?),
    }
}

/// Actions enabled at `state`, in id order.
pub fn enabled_actions(pta: &Pta, state: &PtaState) -> Result<Vec<ActionId>, SemanticsError> {
    let mut out = Vec::new();
    for e in pta.edges_from(state.location) {
        if e.guard.eval(&state.valuation)? {
            out.push(e.action);
        }
    }
    out.sort();
    Ok(out)
}

/// Successor distribution of `state` under `mv`; empty when `mv` is not
/// allowed. Outcomes leading to the same state are merged.
pub fn pta_step(
    pta: &Pta,
    state: &PtaState,
    mv: &Move,
) -> Result<Vec<(PtaState, Probability)>, SemanticsError> {
    match mv {
        Move::Delay(t) => {
            if !delay_allowed(pta, state, t)? {
                return Ok(Vec::new());
            }
            Ok(vec![(
                PtaState {
                    location: state.location,
                    valuation: state.valuation.elapse(t)?,
                },
                Probability::one(),
            )])
        }
        Move::Action(a) => {
            if !action_enabled(pta, state, *a)? {
                return Ok(Vec::new());
            }
            let edge = pta.edge(state.location, *a).expect("enabled");
            let mut out: Vec<(PtaState, Probability)> = Vec::new();
            for b in edge.distribution.branches() {
                let next = PtaState {
                    location: b.target,
                    valuation: state.valuation.reset(b.resets)?,
                };
                match out.iter_mut().find(|(s, _)| *s == next) {
                    Some((_, p)) => *p += &b.prob,
                    None => out.push((next, b.prob.clone())),
                }
            }
            Ok(out)
        }
    }
}

/// `P(s, mv, s')`.
pub fn transition_prob(
    pta: &Pta,
    from: &PtaState,
    mv: &Move,
    to: &PtaState,
) -> Result<Probability, SemanticsError> {
    Ok(pta_step(pta, from, mv)?
        .into_iter()
        .find(|(s, _)| s == to)
        .map(|(_, p)| p)
        .unwrap_or_else(Probability::zero))
}

/// Product of the transition probabilities along the path.
pub fn path_weight(pta: &Pta, path: &FinitePath) -> Result<Probability, SemanticsError> {
    path.check_alternation()?;
    let mut w = Probability::one();
    for i in 0..path.moves.len() {
        if let Move::Action(_) = path.moves[i] {
            w *= transition_prob(pta, &path.states[i], &path.moves[i], &path.states[i + 1])?;
        } else if transition_prob(pta, &path.states[i], &path.moves[i], &path.states[i + 1])?
            .is_zero()
        {
            return Ok(Probability::zero());
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Letter {
    Delay(Time),
    Symbol(Symbol),
}

pub type TimedWord = Vec<Letter>;

/// The timed word of a path: each delay is kept and each action is replaced
/// by the label of the location it leads to.
pub fn extract_word(pta: &Pta, path: &FinitePath) -> Result<TimedWord, SemanticsError> {
    path.check_alternation()?;
    Ok(path
        .moves
        .iter()
        .enumerate()
        .map(|(i, mv)| match mv {
            Move::Delay(t) => Letter::Delay(t.clone()),
            Move::Action(_) => Letter::Symbol(pta.labels(path.states[i + 1].location).clone()),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DtraRun {
    /// Configuration before the word and after every letter.
    pub configs: Vec<(ModeId, Valuation)>,
    /// Mode before the word and after every symbol.
    pub trajectory: Vec<ModeId>,
}

/// Reads one letter.
pub fn dtra_step(
    dtra: &Dtra,
    config: &(ModeId, Valuation),
    letter: &Letter,
) -> Result<(ModeId, Valuation), SemanticsError> {
    let (q, v) = config;
    match letter {
        Letter::Delay(t) => Ok((*q, v.elapse(t)?)),
        Letter::Symbol(s) => {
            let stuck = || SemanticsError::Stuck {
                mode: dtra.mode_name(*q).to_string(),
                symbol: format!("{s:?}"),
                valuation: v.to_string(),
            };
            let b = dtra.symbol_id(s).ok_or_else(stuck)?;
            let rule = dtra.enabled_rule(*q, b, v)?.ok_or_else(stuck)?;
            Ok((rule.target, v.reset(rule.resets)?))
        }
    }
}

/// The run of `dtra` from `start` over `word`.
pub fn dtra_run(
    dtra: &Dtra,
    start: (ModeId, Valuation),
    word: &[Letter],
) -> Result<DtraRun, SemanticsError> {
    let mut run = DtraRun {
        trajectory: vec![start.0],
        configs: vec![start],
    };
    for letter in word {
        let next = dtra_step(dtra, run.configs.last().expect("non-empty"), letter)?;
        if let Letter::Symbol(_) = letter {
            run.trajectory.push(next.0);
        }
        run.configs.push(next);
    }
    Ok(run)
}

/// Whether the set of modes visited infinitely often satisfies some pair.
pub fn rabin_accepting(inf: &BTreeSet<ModeId>, pairs: &[RabinPair]) -> bool {
    pairs
        .iter()
        .any(|p| inf.is_disjoint(&p.avoid) && !inf.is_disjoint(&p.visit))
}

const LASSO_ITERATIONS: usize = 100_000;

/// Acceptance of the infinite path that follows `path` and then repeats its
/// moves from `loop_start` forever. The state at `loop_start` must equal the
/// last state. The automaton starts in `(q, 0)` and first reads the label of
/// the initial location.
pub fn path_accepted(
    pta: &Pta,
    dtra: &Dtra,
    q: ModeId,
    path: &FinitePath,
    loop_start: usize,
) -> Result<bool, SemanticsError> {
    path.check_alternation()?;
    if !loop_start.is_multiple_of(2) || !path.len().is_multiple_of(2) {
        return Err(SemanticsError::NotLasso(
            "the cycle must start and end between an action and a delay".into(),
        ));
    }
    if loop_start >= path.len() {
        return Err(SemanticsError::NotLasso("the cycle is empty".into()));
    }
    if path.states[loop_start] != *path.last() {
        return Err(SemanticsError::NotLasso(format!(
            "state {loop_start} differs from the last state"
        )));
    }
    let word = extract_word(pta, path)?;
    let first = Letter::Symbol(pta.labels(pta.initial()).clone());
    let mut config = dtra_step(dtra, &(q, Valuation::zero(dtra.clock_count())), &first)?;
    for letter in &word[..loop_start] {
        config = dtra_step(dtra, &config, letter)?;
    }
    let cap = Time::from_integer((dtra.max_constant() + 1).into());
    let canonical = |(q, v): &(ModeId, Valuation)| -> (ModeId, Vec<BigRational>) {
        (
            *q,
            v.values()
                .iter()
                .map(|x| if *x > cap { cap.clone() } else { x.clone() })
                .collect(),
        )
    };
    let cycle = &word[loop_start..];
    let mut seen: HashMap<(ModeId, Vec<BigRational>), usize> = HashMap::new();
    let mut visited: Vec<BTreeSet<ModeId>> = Vec::new();
    for iteration in 0..LASSO_ITERATIONS {
        if let Some(&first) = seen.get(&canonical(&config)) {
            let inf: BTreeSet<ModeId> = visited[first..].iter().flatten().copied().collect();
            return Ok(rabin_accepting(&inf, dtra.rabin()));
        }
        seen.insert(canonical(&config), iteration);
        let mut modes = BTreeSet::new();
        for letter in cycle {
            config = dtra_step(dtra, &config, letter)?;
            modes.insert(config.0);
        }
        visited.push(modes);
    }
    Err(SemanticsError::NoRepetition(LASSO_ITERATIONS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{fig1_pta, running_dtra, RunningConstants};

    fn t(n: i64) -> Time {
        Time::from_integer(n.into())
    }

    #[test]
    fn delay_bound_respects_invariant() {
        let pta = fig1_pta();
        let s = PtaState::initial(&pta);
        assert_eq!(delay_bound(&pta, &s).unwrap(), Some((t(10), true)));
        assert!(delay_allowed(&pta, &s, &t(10)).unwrap());
        assert!(!delay_allowed(&pta, &s, &t(11)).unwrap());
    }

    #[test]
    fn word_of_two_moves() {
        let pta = fig1_pta();
        let mut path = FinitePath::initial(&pta);
        let s1 = pta_step(&pta, path.last(), &Move::Delay(t(2))).unwrap()[0]
            .0
            .clone();
        path.push(Move::Delay(t(2)), s1);
        let ta = pta.action_id("tau_alpha").unwrap();
        let succ = pta_step(&pta, path.last(), &Move::Action(ta)).unwrap();
        assert_eq!(succ.len(), 2);
        let wb = succ
            .iter()
            .find(|(s, _)| pta.location(s.location).name == "WORK_beta")
            .unwrap();
        assert_eq!(wb.1, BigRational::new(9.into(), 10.into()));
        path.push(Move::Action(ta), wb.0.clone());
        let word = extract_word(&pta, &path).unwrap();
        assert_eq!(
            word,
            vec![
                Letter::Delay(t(2)),
                Letter::Symbol(BTreeSet::from(["beta".to_string()]))
            ]
        );
        assert_eq!(path_weight(&pta, &path).unwrap(), wb.1);
        assert!(extract_word(&pta, &FinitePath::initial(&pta))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn misaligned_path_is_rejected() {
        let pta = fig1_pta();
        let mut path = FinitePath::initial(&pta);
        path.push(Move::Action(ActionId(0)), PtaState::initial(&pta));
        assert!(matches!(
            extract_word(&pta, &path),
            Err(SemanticsError::Malformed(_))
        ));
    }

    #[test]
    fn run_detects_failure() {
        let dtra = running_dtra(RunningConstants::default());
        let alpha = Letter::Symbol(BTreeSet::from(["alpha".to_string()]));
        let word = vec![alpha.clone(), Letter::Delay(t(4)), alpha];
        let run = dtra_run(&dtra, (dtra.initial(), Valuation::zero(1)), &word).unwrap();
        let names: Vec<_> = run.trajectory.iter().map(|q| dtra.mode_name(*q)).collect();
        assert_eq!(names, ["INIT", "q_alpha", "FAIL"]);
    }

    #[test]
    fn run_gets_stuck_on_missing_symbol() {
        let dtra = running_dtra(RunningConstants::default());
        let word = vec![Letter::Symbol(BTreeSet::new())];
        assert!(matches!(
            dtra_run(&dtra, (dtra.initial(), Valuation::zero(1)), &word),
            Err(SemanticsError::Stuck { .. })
        ));
    }

    #[test]
    fn rabin_condition() {
        let pair = RabinPair {
            avoid: BTreeSet::from([ModeId(0)]),
            visit: BTreeSet::from([ModeId(1)]),
        };
        assert!(rabin_accepting(
            &BTreeSet::from([ModeId(1)]),
            std::slice::from_ref(&pair)
        ));
        assert!(!rabin_accepting(
            &BTreeSet::from([ModeId(0), ModeId(1)]),
            &[pair]
        ));
    }
}
