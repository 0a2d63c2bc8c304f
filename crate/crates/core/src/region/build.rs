use std::collections::{HashMap, VecDeque};

use num::BigRational;

use super::{clock_ceilings, uniform_ceilings, Ceilings, Region, RegionError};
use crate::mdp::{Mdp, MdpBuilder};
use crate::model::{ClockSet, LocationId, Pta};

/// Action name of delay moves in the region MDP.
pub const DELAY: &str = "delay";
/// Action name of the self-loop added to states without any move.
pub const DEADLOCK: &str = "deadlock";

#[derive(Debug, Clone)]
pub struct RegionOptions {
    /// Use a separate maximal constant per clock instead of one ceiling.
    pub per_clock_ceilings: bool,
    /// Forget clocks that are reset before they are next read.
    pub active_clocks: bool,
    pub max_states: usize,
}

impl Default for RegionOptions {
    fn default() -> Self {
        RegionOptions {
            per_clock_ceilings: true,
            active_clocks: true,
            max_states: 20_000_000,
        }
    }
}

impl RegionOptions {
    /// The textbook construction: one ceiling, every clock tracked.
    pub fn plain() -> Self {
        RegionOptions {
            per_clock_ceilings: false,
            active_clocks: false,
            ..Self::default()
        }
    }
}

/// The region MDP of a PTA with the (location, region) pair of each state.
#[derive(Debug, Clone)]
pub struct RegionMdp {
    pub mdp: Mdp,
    pub states: Vec<(LocationId, Region)>,
    pub ceilings: Ceilings,
    pub active: Vec<ClockSet>,
}

impl RegionMdp {
    pub fn state_of(&self, l: LocationId, r: &Region) -> Option<usize> {
        self.states.iter().position(|(k, s)| *k == l && s == r)
    }
}

/// Clocks of each location that may be read before their next reset.
pub fn active_clocks(pta: &Pta) -> Vec<ClockSet> {
    let n = pta.locations().len();
    let mut act: Vec<ClockSet> = (0..n)
        .map(|l| pta.invariant(LocationId(l)).clocks())
        .collect();
    for e in pta.edges() {
        let s = e.source.0;
        act[s] = act[s].union(e.guard.clocks());
    }
    loop {
        let mut changed = false;
        for e in pta.edges() {
            let s = e.source.0;
            for b in e.distribution.branches() {
                let add = act[b.target.0].difference(b.resets);
                let next = act[s].union(add);
                if next != act[s] {
                    act[s] = next;
                    changed = true;
                }
            }
        }
        if !changed {
            return act;
        }
    }
}

/// Forward exploration of reachable (location, region) pairs.
pub fn build_region_mdp(pta: &Pta, opts: &RegionOptions) -> Result<RegionMdp, RegionError> {
    if let Some(d) = pta.find_diagonal() {
        return Err(RegionError::UnsupportedConstraint(
            d.display(pta.clocks()).to_string(),
        ));
    }
    let clocks = pta.clock_count();
    let ceilings = if opts.per_clock_ceilings {
        clock_ceilings(pta)?
    } else {
        uniform_ceilings(clocks, super::ceiling_of(pta))?
    };
    let all = ClockSet::all(clocks);
    let active: Vec<ClockSet> = if opts.active_clocks {
        active_clocks(pta)
    } else {
        vec![all; pta.locations().len()]
    };
    let inactive: Vec<ClockSet> = active.iter().map(|a| all.difference(*a)).collect();

    let mut b = MdpBuilder::new();
    for ap in pta.atomic_props() {
        b.label(ap);
    }
    let loc_labels: Vec<Vec<u32>> = pta
        .locations()
        .iter()
        .map(|l| l.labels.iter().map(|ap| b.label(ap)).collect())
        .collect();
    let delay = b.action(DELAY);
    let actions: Vec<u32> = pta.actions().iter().map(|a| b.action(a)).collect();
    let deadlock = b.action(DEADLOCK);

    let mut index: HashMap<(LocationId, Region), usize> = HashMap::new();
    let mut states: Vec<(LocationId, Region)> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut intern = |l: LocationId,
                      r: Region,
                      b: &mut MdpBuilder,
                      states: &mut Vec<(LocationId, Region)>,
                      queue: &mut VecDeque<usize>|
     -> Result<usize, RegionError> {
        if let Some(&id) = index.get(&(l, r.clone())) {
            return Ok(id);
        }
        if states.len() >= opts.max_states {
            return Err(RegionError::TooManyStates(opts.max_states));
        }
        let id = b.add_state(&loc_labels[l.0]);
        index.insert((l, r.clone()), id);
        states.push((l, r));
        queue.push_back(id);
        Ok(id)
    };

    let l0 = pta.initial();
    let mut r0 = Region::zero(clocks);
    r0.forget(inactive[l0.0], &ceilings);
    if !r0.satisfies(pta.invariant(l0), &ceilings)? {
        return Err(RegionError::InitialInvariant(pta.location(l0).name.clone()));
    }
    let init = intern(l0, r0, &mut b, &mut states, &mut queue)?;
    b.set_initial(init);

    while let Some(id) = queue.pop_front() {
        debug_assert_eq!(id, b.current());
        let (l, r) = states[id].clone();
        let inv = pta.invariant(l);
        let mut moved = false;

        let next = r.delay_successor(&ceilings);
        if next == r {
            b.add_move(delay, &[(id, BigRational::from_integer(1.into()))]);
            moved = true;
        } else if next.satisfies(inv, &ceilings)? {
            let t = intern(l, next, &mut b, &mut states, &mut queue)?;
            b.add_move(delay, &[(t, BigRational::from_integer(1.into()))]);
            moved = true;
        }

        for e in pta.edges_from(l) {
            if !r.satisfies(&e.guard, &ceilings)? {
                continue;
            }
            let mut branches = Vec::with_capacity(e.distribution.branches().len());
            for br in e.distribution.branches() {
                let mut r2 = r.reset(br.resets);
                r2.forget(inactive[br.target.0], &ceilings);
                if !r2.satisfies(pta.invariant(br.target), &ceilings)? {
                    return Err(RegionError::NotWellFormed {
                        location: pta.location(br.target).name.clone(),
                        action: pta.actions()[e.action.0].clone(),
                    });
                }
                let t = intern(br.target, r2, &mut b, &mut states, &mut queue)?;
                branches.push((t, br.prob.clone()));
            }
            b.add_move(actions[e.action.0], &branches);
            moved = true;
        }

        if !moved {
            b.add_move(deadlock, &[(id, BigRational::from_integer(1.into()))]);
        }
        b.close_state();
    }

    let mdp = b.build().expect("region MDP distributions are exact");
    Ok(RegionMdp {
        mdp,
        states,
        ceilings,
        active,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Branch, ClockId, Constraint, PtaBuilder};
    use num::One;

    #[test]
    fn one_clock_reset_loop_has_three_states() {
        let mut b = PtaBuilder::new();
        let x = b.clock("x");
        let l = b.location("l", Constraint::upper(x, 1), Vec::<String>::new());
        let a = b.action("a");
        b.edge(
            l,
            a,
            Constraint::equals(x, 1),
            vec![Branch {
                prob: BigRational::one(),
                resets: ClockSet::singleton(x),
                target: l,
            }],
        );
        b.initial(l);
        let pta = b.build().unwrap();
        let reg = build_region_mdp(&pta, &RegionOptions::default()).unwrap();
        assert_eq!(reg.mdp.num_states(), 3);
        let enabled: Vec<usize> = (0..3)
            .filter(|&s| {
                reg.mdp
                    .moves(s)
                    .any(|m| reg.mdp.action_names()[reg.mdp.move_action(m)] == "a")
            })
            .collect();
        assert_eq!(enabled.len(), 1);
        let (_, r) = &reg.states[enabled[0]];
        assert_eq!(r.ints(), &[1]);
        assert_eq!(r.ranks(), &[0]);
        let _ = ClockId(0);
    }

    #[test]
    fn clockless_pta_has_one_state_per_location() {
        let mut b = PtaBuilder::new();
        let l = b.location("l", Constraint::True, ["p"]);
        b.initial(l);
        let pta = b.build().unwrap();
        let reg = build_region_mdp(&pta, &RegionOptions::default()).unwrap();
        assert_eq!(reg.mdp.num_states(), 1);
        assert_eq!(reg.mdp.targets(0).collect::<Vec<_>>(), vec![0]);
        assert_eq!(reg.mdp.action_names()[reg.mdp.move_action(0)], DELAY);
    }
}
