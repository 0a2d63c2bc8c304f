use std::collections::BTreeSet;

use super::BenchError;
use crate::model::{
    ActionId, ClockSet, Constraint, Distribution, Dtra, LocationId, ModeId, Pta, PtaBuilder,
    Symbol, Time,
};
use crate::semantics::{FinitePath, Move, Scheduler, SemanticsError};

/// Proposition labelling the extra start location of [`word_pta`].
pub const START_PROP: &str = "start";
/// Proposition labelling accepting locations in [`reachability_reduction`].
pub const ACC_PROP: &str = "acc";

fn fresh(taken: impl IntoIterator<Item = impl AsRef<str>>, name: &str) -> Result<(), BenchError> {
    if taken.into_iter().any(|t| t.as_ref() == name) {
        return Err(BenchError::NameCollision(name.to_string()));
    }
    Ok(())
}

/// A clock-free PTA that can produce every timed word over `symbols`: one
/// location per symbol plus a start location `b0`, and from every location a
/// Dirac action `to_i` into the location of symbol `i`. Returns the PTA and
/// `b0`.
pub fn word_pta(symbols: &[Symbol]) -> Result<(Pta, LocationId), BenchError> {
    if symbols.is_empty() {
        return Err(BenchError::Params("at least one symbol is needed".into()));
    }
    let distinct: BTreeSet<&Symbol> = symbols.iter().collect();
    if distinct.len() != symbols.len() {
        return Err(BenchError::Params("symbols must be distinct".into()));
    }
    let props: BTreeSet<&String> = symbols.iter().flatten().collect();
    fresh(&props, START_PROP)?;
    let mut b = PtaBuilder::new();
    let b0 = b.location("b0", Constraint::True, [START_PROP]);
    let locs: Vec<LocationId> = symbols
        .iter()
        .enumerate()
        .map(|(i, s)| b.location(format!("b{}", i + 1), Constraint::True, s.iter().cloned()))
        .collect();
    let acts: Vec<ActionId> = (0..symbols.len())
        .map(|i| b.action(format!("to_{}", i + 1)))
        .collect();
    for &from in std::iter::once(&b0).chain(&locs) {
        for (i, &to) in locs.iter().enumerate() {
            b.edge(
                from,
                acts[i],
                Constraint::True,
                Distribution::dirac(ClockSet::empty(), to)
                    .branches()
                    .to_vec(),
            );
        }
    }
    b.initial(b0);
    b.atomic_props(props.iter().map(|p| p.as_str()).chain([START_PROP]));
    Ok((b.build()?, b0))
}

/// Adds a mode `q_init` that reads the start symbol of [`word_pta`],
/// resets every clock and moves to the original initial mode. The result
/// starts in `q_init`.
pub fn extend_tra(dtra: &Dtra) -> Result<Dtra, BenchError> {
    fresh(dtra.modes(), "q_init")?;
    for s in dtra.alphabet() {
        fresh(s, START_PROP)?;
    }
    let mut b = dtra.to_builder();
    let start = b.symbol(Symbol::from([START_PROP.to_string()]));
    let q_init = b.mode("q_init");
    let all = ClockSet::all(dtra.clock_count());
    b.rule(q_init, start, Constraint::True, all, dtra.initial());
    b.initial(q_init);
    Ok(b.build()?)
}

/// Follows an ultimately periodic timed word `(t_k, i_k)`: wait `t_k`, then
/// move to the location of symbol `i_k`. After the last letter it continues
/// from `loop_start`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordFollower {
    pub letters: Vec<(Time, usize)>,
    pub loop_start: usize,
}

impl WordFollower {
    fn letter(&self, k: usize) -> &(Time, usize) {
        if k < self.letters.len() {
            return &self.letters[k];
        }
        let period = self.letters.len() - self.loop_start;
        &self.letters[self.loop_start + (k - self.loop_start) % period]
    }
}

impl Scheduler for WordFollower {
    fn decide(&self, pta: &Pta, path: &FinitePath) -> Result<Move, SemanticsError> {
        if self.loop_start >= self.letters.len() {
            return Err(SemanticsError::SchedulerContract {
                step: path.len(),
                reason: "the word has an empty cycle".into(),
            });
        }
        let (t, i) = self.letter(path.len() / 2);
        if path.len().is_multiple_of(2) {
            return Ok(Move::Delay(t.clone()));
        }
        pta.action_id(&format!("to_{}", i + 1))
            .map(Move::Action)
            .ok_or_else(|| SemanticsError::SchedulerContract {
                step: path.len(),
                reason: format!("symbol index {i} is out of range"),
            })
    }
}

/// Adds `acc` to the labels of the locations in `accepting`, and builds the
/// clock-free two-mode automaton that moves to the absorbing accepting mode
/// on the first `acc` symbol. Returns the relabelled PTA, the automaton and
/// its initial mode.
pub fn reachability_reduction(
    pta: &Pta,
    accepting: &BTreeSet<LocationId>,
) -> Result<(Pta, Dtra, ModeId), BenchError> {
    fresh(pta.atomic_props(), ACC_PROP)?;
    let mut b = PtaBuilder::new();
    for c in pta.clocks() {
        b.clock(c.clone());
    }
    for (i, l) in pta.locations().iter().enumerate() {
        let mut labels = l.labels.clone();
        if accepting.contains(&LocationId(i)) {
            labels.insert(ACC_PROP.to_string());
        }
        b.location(l.name.clone(), l.invariant.clone(), labels);
    }
    for a in pta.actions() {
        b.action(a.clone());
    }
    for e in pta.edges() {
        b.edge(
            e.source,
            e.action,
            e.guard.clone(),
            e.distribution.branches().to_vec(),
        );
    }
    b.initial(pta.initial());
    b.atomic_props(
        pta.atomic_props()
            .iter()
            .map(|p| p.as_str())
            .chain([ACC_PROP]),
    );
    let relabelled = b.build()?;

    let mut d = crate::model::DtraBuilder::new();
    let symbols: BTreeSet<Symbol> = relabelled
        .locations()
        .iter()
        .map(|l| l.labels.clone())
        .collect();
    let q0 = d.mode("q0");
    let q1 = d.mode("q1");
    for s in symbols {
        let hit = s.contains(ACC_PROP);
        let id = d.symbol(s);
        d.rule(
            q0,
            id,
            Constraint::True,
            ClockSet::empty(),
            if hit { q1 } else { q0 },
        );
        d.rule(q1, id, Constraint::True, ClockSet::empty(), q1);
    }
    d.initial(q0).rabin_pair(Vec::<ModeId>::new(), [q1]);
    Ok((relabelled, d.build()?, q0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{running_dtra, RunningConstants};
    use crate::semantics::{extract_word, path_accepted, sample_path};

    fn sym(props: &[&str]) -> Symbol {
        props.iter().map(|p| p.to_string()).collect()
    }

    #[test]
    fn word_pta_shape() {
        let (pta, b0) = word_pta(&[sym(&["alpha"]), sym(&["beta"])]).unwrap();
        assert_eq!(pta.locations().len(), 3);
        assert_eq!(pta.clock_count(), 0);
        assert_eq!(pta.initial(), b0);
        assert_eq!(pta.edges().len(), 6);
        assert!(pta.edges().iter().all(|e| e.distribution.is_dirac()));
    }

    #[test]
    fn start_prop_collision() {
        assert_eq!(
            word_pta(&[sym(&["start"])]).unwrap_err(),
            BenchError::NameCollision("start".into())
        );
    }

    #[test]
    fn follower_reproduces_word() {
        let (pta, _) = word_pta(&[sym(&["alpha"]), sym(&["beta"])]).unwrap();
        let two = Time::from_integer(2.into());
        let f = WordFollower {
            letters: vec![(two.clone(), 0), (two.clone(), 1)],
            loop_start: 0,
        };
        let path = sample_path(&pta, &f, 8, 0).unwrap();
        let word = extract_word(&pta, &path).unwrap();
        assert_eq!(word.len(), 8);
        assert_eq!(word[3], crate::semantics::Letter::Symbol(sym(&["beta"])));
    }

    #[test]
    fn extended_automaton_judges_followed_words() {
        let dtra = running_dtra(RunningConstants::default());
        let ext = crate::model::validate::complete_to_total(&extend_tra(&dtra).unwrap()).unwrap();
        let symbols: Vec<Symbol> = vec![sym(&["alpha"]), sym(&["beta"])];
        let (pta, _) = word_pta(&symbols).unwrap();
        let one = Time::from_integer(1.into());
        let good = WordFollower {
            letters: vec![(one.clone(), 0), (one.clone(), 1)],
            loop_start: 0,
        };
        let path = sample_path(&pta, &good, 4, 0).unwrap();
        assert!(path_accepted(&pta, &ext, ext.initial(), &path, 0).is_err());
        let path = sample_path(&pta, &good, 6, 0).unwrap();
        assert!(path_accepted(&pta, &ext, ext.initial(), &path, 2).unwrap());
        let slow = WordFollower {
            letters: vec![
                (Time::from_integer(7.into()), 0),
                (Time::from_integer(7.into()), 1),
            ],
            loop_start: 0,
        };
        let path = sample_path(&pta, &slow, 6, 0).unwrap();
        assert!(!path_accepted(&pta, &ext, ext.initial(), &path, 2).unwrap());
    }

    #[test]
    fn reduction_labels() {
        let pta = crate::bench::fig1_pta();
        let wb = pta.location_id("WORK_beta").unwrap();
        let (relabelled, dtra, _) = reachability_reduction(&pta, &BTreeSet::from([wb])).unwrap();
        assert_eq!(relabelled.labels(wb), &sym(&["acc", "beta"]));
        assert_eq!(relabelled.labels(pta.initial()), &sym(&["alpha"]));
        assert_eq!(dtra.modes().len(), 2);
        assert_eq!(dtra.clock_count(), 0);
    }
}
