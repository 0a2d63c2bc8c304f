//! Random model generators and brute-force oracles shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use num::{BigRational, One, Zero};
use pta_core::mdp::{Mdp, MdpBuilder};
use pta_core::model::{Branch, ClockId, ClockSet, Constraint, LocationId, Pta, PtaBuilder};
use rand::seq::IndexedRandom;
use rand::Rng;

pub const LABELS: [&str; 3] = ["a", "b", "c"];

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Splits one into `k` positive parts with denominators dividing 12.
pub fn random_distribution<R: Rng>(rng: &mut R, k: usize) -> Vec<BigRational> {
    let k = k.clamp(1, 12);
    let mut cuts: BTreeSet<i64> = BTreeSet::new();
    while cuts.len() < k - 1 {
        cuts.insert(rng.random_range(1..12));
    }
    let mut last = 0;
    let mut out = Vec::with_capacity(k);
    for c in cuts.into_iter().chain([12]) {
        out.push(ratio(c - last, 12));
        last = c;
    }
    out
}

/// A random MDP with `n` states, one to `max_moves` moves per state, and
/// states labelled with random subsets of [`LABELS`].
pub fn random_mdp<R: Rng>(rng: &mut R, n: usize, max_moves: usize, max_branches: usize) -> Mdp {
    let mut b = MdpBuilder::new();
    let ids: Vec<u32> = LABELS.iter().map(|l| b.label(l)).collect();
    let act = b.action("m");
    for _ in 0..n {
        let labels: Vec<u32> = ids
            .iter()
            .copied()
            .filter(|_| rng.random_bool(0.3))
            .collect();
        b.add_state(&labels);
    }
    for _ in 0..n {
        for _ in 0..rng.random_range(1..=max_moves) {
            let k = rng.random_range(1..=max_branches);
            let probs = random_distribution(rng, k);
            let branches: Vec<(usize, BigRational)> = probs
                .into_iter()
                .map(|p| (rng.random_range(0..n), p))
                .collect();
            b.add_move(act, &branches);
        }
        b.close_state();
    }
    b.set_initial(0);
    b.build().expect("random MDP is well formed")
}

pub fn states_with(mdp: &Mdp, label: &str) -> Vec<bool> {
    match mdp.label_id(label) {
        Some(id) => mdp.states_with_any(&[id]),
        None => vec![false; mdp.num_states()],
    }
}

/// Moves of states in `set` whose whole support lies in `set`.
pub fn internal_moves(mdp: &Mdp, set: &[bool]) -> Vec<usize> {
    (0..mdp.num_states())
        .filter(|&s| set[s])
        .flat_map(|s| mdp.moves(s))
        .filter(|&m| mdp.targets(m).all(|t| set[t]))
        .collect()
}

/// Whether the states of `set` carry an end component using every internal
/// move: each state keeps a move and the move graph is strongly connected.
pub fn is_end_component(mdp: &Mdp, set: &[bool]) -> bool {
    let members: Vec<usize> = (0..set.len()).filter(|&s| set[s]).collect();
    if members.is_empty() {
        return false;
    }
    let moves = internal_moves(mdp, set);
    let n = mdp.num_states();
    let mut adj = vec![Vec::new(); n];
    let owner = mdp.move_owner();
    for &m in &moves {
        for t in mdp.targets(m) {
            adj[owner[m] as usize].push(t);
        }
    }
    if members.iter().any(|&s| adj[s].is_empty()) {
        return false;
    }
    let reach = |from: usize, adj: &[Vec<usize>]| {
        let mut seen = vec![false; n];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(s) = stack.pop() {
            for &t in &adj[s] {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        seen
    };
    let mut radj = vec![Vec::new(); n];
    for s in 0..n {
        for &t in &adj[s] {
            radj[t].push(s);
        }
    }
    let fwd = reach(members[0], &adj);
    let bwd = reach(members[0], &radj);
    members.iter().all(|&s| fwd[s] && bwd[s])
}

/// Every state set carrying an end component, by enumerating subsets.
pub fn all_end_components(mdp: &Mdp) -> Vec<Vec<bool>> {
    let n = mdp.num_states();
    assert!(n <= 16, "exhaustive enumeration needs a small MDP");
    (1u32..(1 << n))
        .map(|mask| (0..n).map(|s| mask & (1 << s) != 0).collect::<Vec<bool>>())
        .filter(|set| is_end_component(mdp, set))
        .collect()
}

fn subset(a: &[bool], b: &[bool]) -> bool {
    a.iter().zip(b).all(|(x, y)| !x || *y)
}

/// Maximal end components as sorted `(states, moves)` pairs.
pub fn mec_oracle(mdp: &Mdp) -> Vec<(Vec<usize>, Vec<usize>)> {
    let all = all_end_components(mdp);
    let mut out: Vec<(Vec<usize>, Vec<usize>)> = all
        .iter()
        .filter(|s| !all.iter().any(|t| t != *s && subset(s, t)))
        .map(|s| {
            let states: Vec<usize> = (0..s.len()).filter(|&i| s[i]).collect();
            let mut moves = internal_moves(mdp, s);
            moves.sort_unstable();
            (states, moves)
        })
        .collect();
    out.sort();
    out
}

fn touches(set: &[bool], other: &[bool]) -> bool {
    set.iter().zip(other).any(|(a, b)| *a && *b)
}

/// Union of the end components avoiding `avoid` and touching `visit`.
pub fn rabin_oracle(
    mdp: &Mdp,
    pairs: &[(Vec<bool>, Vec<bool>)],
    tick: Option<&[bool]>,
) -> Vec<bool> {
    let mut out = vec![false; mdp.num_states()];
    for ec in all_end_components(mdp) {
        let good = pairs
            .iter()
            .any(|(avoid, visit)| !touches(&ec, avoid) && touches(&ec, visit));
        if good && tick.is_none_or(|t| touches(&ec, t)) {
            for (o, e) in out.iter_mut().zip(&ec) {
                *o |= *e;
            }
        }
    }
    out
}

/// Union of the end components that touch `response` whenever they touch
/// `request`, for every pair.
pub fn streett_oracle(
    mdp: &Mdp,
    pairs: &[(Vec<bool>, Vec<bool>)],
    tick: Option<&[bool]>,
) -> Vec<bool> {
    let mut out = vec![false; mdp.num_states()];
    for ec in all_end_components(mdp) {
        let good = pairs
            .iter()
            .all(|(request, response)| !touches(&ec, request) || touches(&ec, response));
        if good && tick.is_none_or(|t| touches(&ec, t)) {
            for (o, e) in out.iter_mut().zip(&ec) {
                *o |= *e;
            }
        }
    }
    out
}

/// A random guard on one clock with constants up to `max`.
pub fn random_guard<R: Rng>(rng: &mut R, x: ClockId, max: u32) -> Constraint {
    match rng.random_range(0..5) {
        0 => Constraint::True,
        1 => Constraint::lower(rng.random_range(0..=max), x),
        2 => Constraint::upper(x, rng.random_range(0..=max)),
        3 => {
            let lo = rng.random_range(0..=max);
            Constraint::lower(lo, x).and(Constraint::upper(x, rng.random_range(lo..=max)))
        }
        _ => Constraint::strict_lower(rng.random_range(0..max), x),
    }
}

fn random_branches<R: Rng>(
    rng: &mut R,
    locs: &[LocationId],
    bounded: &[bool],
    all: ClockSet,
    k: usize,
    reset_all: bool,
) -> Vec<Branch> {
    let mut branches: Vec<Branch> = Vec::new();
    for p in random_distribution(rng, k) {
        let target = rng.random_range(0..locs.len());
        let resets = if reset_all || bounded[target] || rng.random_bool(0.5) {
            all
        } else {
            ClockSet::empty()
        };
        match branches
            .iter_mut()
            .find(|br| br.target.0 == target && br.resets == resets)
        {
            Some(br) => br.prob += p,
            None => branches.push(Branch {
                prob: p,
                resets,
                target: locs[target],
            }),
        }
    }
    branches
}

/// A small random PTA over propositions `p` and `r`. Every location has a
/// `reset` action with guard true that resets every clock, so time can always
/// diverge; branches into a location with an invariant reset every clock, so
/// the PTA is well formed. Some locations are absorbing.
pub fn random_pta<R: Rng>(rng: &mut R) -> Pta {
    let mut b = PtaBuilder::new();
    let clocks = rng.random_range(1..=2);
    let ids: Vec<ClockId> = (0..clocks).map(|i| b.clock(format!("x{i}"))).collect();
    let all = ClockSet::all(clocks);
    let n = rng.random_range(3..=5);
    let props = ["p", "r"];
    let mut bounded = Vec::new();
    let locs: Vec<LocationId> = (0..n)
        .map(|i| {
            let labels: Vec<&str> = props
                .iter()
                .copied()
                .filter(|_| rng.random_bool(0.4))
                .collect();
            let inv = if rng.random_bool(0.4) {
                Constraint::upper(*ids.choose(rng).expect("a clock"), rng.random_range(1..=3))
            } else {
                Constraint::True
            };
            bounded.push(!inv.is_true());
            b.location(format!("l{i}"), inv, labels)
        })
        .collect();
    let reset = b.action("reset");
    let acts: Vec<_> = (0..2).map(|i| b.action(format!("a{i}"))).collect();
    for (i, &l) in locs.iter().enumerate() {
        // some non-initial locations are absorbing
        if i > 0 && rng.random_bool(0.4) {
            b.edge(
                l,
                reset,
                Constraint::True,
                vec![Branch {
                    prob: BigRational::one(),
                    resets: all,
                    target: l,
                }],
            );
            continue;
        }
        let k = rng.random_range(2..=3);
        b.edge(
            l,
            reset,
            Constraint::True,
            random_branches(rng, &locs, &bounded, all, k, true),
        );
        for &a in &acts {
            if rng.random_bool(0.7) {
                continue;
            }
            let x = *ids.choose(rng).expect("a clock");
            let guard = random_guard(rng, x, 3);
            let k = rng.random_range(1..=3);
            b.edge(
                l,
                a,
                guard,
                random_branches(rng, &locs, &bounded, all, k, false),
            );
        }
    }
    b.initial(locs[0]);
    b.atomic_props(props);
    b.build().expect("random PTA is valid")
}

/// Reachability probabilities of the Markov chain that takes move
/// `choice[s]` in every state, by exact Gaussian elimination.
pub fn chain_reach(mdp: &Mdp, choice: &[usize], target: &[bool]) -> Vec<BigRational> {
    let n = mdp.num_states();
    // states that reach the target with positive probability
    let mut live = target.to_vec();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !live[s] && mdp.targets(choice[s]).any(|t| live[t]) {
                live[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let unknown: Vec<usize> = (0..n).filter(|&s| live[s] && !target[s]).collect();
    let index = |s: usize| unknown.iter().position(|&u| u == s);
    let k = unknown.len();
    let mut a = vec![vec![BigRational::zero(); k + 1]; k];
    for (row, &s) in unknown.iter().enumerate() {
        a[row][row] = BigRational::one();
        for b in mdp.branches(choice[s]) {
            let t = mdp.target(b);
            if target[t] {
                a[row][k] += mdp.prob(b);
            } else if let Some(col) = index(t) {
                a[row][col] -= mdp.prob(b);
            }
        }
    }
    for col in 0..k {
        let pivot = (col..k)
            .find(|&r| !a[r][col].is_zero())
            .expect("chain system is regular");
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v = &*v / &p;
        }
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=k {
                    let d = &f * &a[col][c];
                    a[r][c] -= d;
                }
            }
        }
    }
    (0..n)
        .map(|s| {
            if target[s] {
                BigRational::one()
            } else {
                index(s)
                    .map(|i| a[i][k].clone())
                    .unwrap_or_else(BigRational::zero)
            }
        })
        .collect()
}

/// Optimal reachability values over all memoryless deterministic
/// schedulers, by enumeration.
pub fn enumerate_optimum(mdp: &Mdp, target: &[bool], maximise: bool) -> Vec<BigRational> {
    let n = mdp.num_states();
    let mut choice: Vec<usize> = (0..n).map(|s| mdp.moves(s).start).collect();
    let mut best: Option<Vec<BigRational>> = None;
    loop {
        let v = chain_reach(mdp, &choice, target);
        best = Some(match best {
            None => v,
            Some(b) => b
                .into_iter()
                .zip(v)
                .map(|(x, y)| if (y > x) == maximise { y } else { x })
                .collect(),
        });
        let mut s = 0;
        loop {
            if s == n {
                return best.expect("at least one scheduler");
            }
            choice[s] += 1;
            if choice[s] < mdp.moves(s).end {
                break;
            }
            choice[s] = mdp.moves(s).start;
            s += 1;
        }
    }
}
