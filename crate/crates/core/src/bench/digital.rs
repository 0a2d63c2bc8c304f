use std::collections::{HashMap, VecDeque};

use num::BigRational;
use thiserror::Error;

use super::BenchmarkInstance;
use crate::mdp::check::{analyze, named_pairs, CheckResult};
use crate::mdp::{MdpBuilder, ReachOptions};
use crate::model::validate::{complete_to_total, CompletionError};
use crate::model::{ClockId, Constraint, LocationId, Pta};
use crate::product::{
    build_product, tick_transform, ProductError, ProductOptions, TickError, TICK_LABEL,
};
use crate::region::{DEADLOCK, DELAY};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DigitalError {
    #[error("digital clocks need closed, diagonal-free constraints; found `{0}`")]
    NotClosed(String),
    #[error("digital clocks need convex invariants; `{0}` is not")]
    NonConvexInvariant(String),
    #[error("location `{0}` is entered outside its invariant")]
    NotWellFormed(String),
    #[error("digital MDP exceeds {0} states")]
    TooManyStates(usize),
    #[error("completion: {0}")]
    Completion(#[from] CompletionError),
    #[error("product: {0}")]
    Product(#[from] ProductError),
    #[error("tick transform: {0}")]
    Tick(#[from] TickError),
}

const MAX_STATES: usize = 20_000_000;

fn convex(c: &Constraint) -> bool {
    match c {
        Constraint::True | Constraint::Upper(..) | Constraint::Lower(..) => true,
        Constraint::Not(inner) => matches!(
            **inner,
            Constraint::True | Constraint::Upper(..) | Constraint::Lower(..)
        ),
        Constraint::And(a, b) => convex(a) && convex(b),
        Constraint::Diagonal { .. } => false,
    }
}

/// Minimal and maximal acceptance probabilities computed on integer-valued
/// clocks: unit delays only, values saturating one above the largest
/// constant. Valid for closed, diagonal-free models.
pub fn digital_clocks_oracle(
    inst: &BenchmarkInstance,
    reach: &ReachOptions,
) -> Result<CheckResult, DigitalError> {
    let pta = &inst.pta;
    for c in pta.constraints() {
        if !c.is_closed() || c.has_diagonal() {
            return Err(DigitalError::NotClosed(c.display(pta.clocks()).to_string()));
        }
    }
    for r in inst.dtra.rules() {
        if !r.guard.is_closed() || r.guard.has_diagonal() {
            return Err(DigitalError::NotClosed(
                r.guard.display(inst.dtra.clocks()).to_string(),
            ));
        }
    }
    // complement guards added by completion only lead to the rejecting sink
    let dtra = complete_to_total(&inst.dtra)?;
    let product = build_product(pta, &dtra, inst.mode, ProductOptions::default())?;
    let ticked = tick_transform(&product.pta)?;
    let model = &ticked.pta;
    for l in model.locations() {
        if !convex(&l.invariant) {
            return Err(DigitalError::NonConvexInvariant(
                l.invariant.display(model.clocks()).to_string(),
            ));
        }
    }
    let mdp = digital_mdp(model)?;
    Ok(analyze(&mdp, &named_pairs(&dtra), Some(TICK_LABEL), reach))
}

fn holds(c: &Constraint, v: &[u16]) -> bool {
    c.eval_with(&|x: ClockId| v.get(x.0).map(|&k| i64::from(k)))
        .expect("clocks belong to the model")
}

/// The integer-clock MDP of `pta`, explored forward from the initial state.
pub fn digital_mdp(pta: &Pta) -> Result<crate::mdp::Mdp, DigitalError> {
    let cap = u16::try_from(pta.max_constant() + 1).unwrap_or(u16::MAX);
    let mut b = MdpBuilder::new();
    for ap in pta.atomic_props() {
        b.label(ap);
    }
    let labels: Vec<Vec<u32>> = pta
        .locations()
        .iter()
        .map(|l| l.labels.iter().map(|a| b.label(a)).collect())
        .collect();
    let delay = b.action(DELAY);
    let actions: Vec<u32> = pta.actions().iter().map(|a| b.action(a)).collect();
    let deadlock = b.action(DEADLOCK);
    let one = BigRational::from_integer(1.into());

    type Key = (LocationId, Vec<u16>);
    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut states: Vec<Key> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut visit =
        |key: Key, b: &mut MdpBuilder, states: &mut Vec<Key>, queue: &mut VecDeque<usize>| {
            if let Some(&id) = index.get(&key) {
                return Ok(id);
            }
            if states.len() >= MAX_STATES {
                return Err(DigitalError::TooManyStates(MAX_STATES));
            }
            let id = b.add_state(&labels[key.0 .0]);
            index.insert(key.clone(), id);
            states.push(key);
            queue.push_back(id);
            Ok(id)
        };
    let init = visit(
        (pta.initial(), vec![0; pta.clock_count()]),
        &mut b,
        &mut states,
        &mut queue,
    )?;
    b.set_initial(init);
    while let Some(id) = queue.pop_front() {
        let (l, v) = states[id].clone();
        let mut moved = false;
        let later: Vec<u16> = v.iter().map(|&k| (k + 1).min(cap)).collect();
        if later == v {
            b.add_move(delay, &[(id, one.clone())]);
            moved = true;
        } else if holds(pta.invariant(l), &later) {
            let t = visit((l, later), &mut b, &mut states, &mut queue)?;
            b.add_move(delay, &[(t, one.clone())]);
            moved = true;
        }
        for e in pta.edges_from(l) {
            if !holds(&e.guard, &v) {
                continue;
            }
            let mut out = Vec::new();
            for br in e.distribution.branches() {
                let mut w = v.clone();
                for x in br.resets.iter() {
                    w[x.0] = 0;
                }
                if !holds(pta.invariant(br.target), &w) {
                    return Err(DigitalError::NotWellFormed(
                        pta.location(br.target).name.clone(),
                    ));
                }
                let t = visit((br.target, w), &mut b, &mut states, &mut queue)?;
                out.push((t, br.prob.clone()));
            }
            b.add_move(actions[e.action.0], &out);
            moved = true;
        }
        if !moved {
            b.add_move(deadlock, &[(id, one.clone())]);
        }
        b.close_state();
    }
    Ok(b.build().expect("distributions are exact"))
}
