use std::fmt;

use rayon::prelude::*;

use super::{Mdp, StateSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Min,
    Max,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Min => "min",
            Direction::Max => "max",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReachOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Worker threads for value-iteration sweeps; 1 runs sequentially.
    pub threads: usize,
}

impl Default for ReachOptions {
    fn default() -> Self {
        ReachOptions {
            tol: 1e-8,
            max_iterations: 1_000_000,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReachResult {
    pub values: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm difference of the last two iterates.
    pub residual: f64,
    /// Residual after every sweep.
    pub residuals: Vec<f64>,
    pub converged: bool,
    /// One optimal move per state (global move index).
    pub policy: Vec<usize>,
    /// States with value 0 found by graph analysis.
    pub prob0: StateSet,
    /// States with value 1 found by graph analysis.
    pub prob1: StateSet,
}

pub fn max_reach(mdp: &Mdp, target: &[bool], opts: &ReachOptions) -> ReachResult {
    solve(mdp, target, Direction::Max, opts)
}

pub fn min_reach(mdp: &Mdp, target: &[bool], opts: &ReachOptions) -> ReachResult {
    solve(mdp, target, Direction::Min, opts)
}

/// Value iteration from below after qualitative precomputation.
pub fn solve(mdp: &Mdp, target: &[bool], dir: Direction, opts: &ReachOptions) -> ReachResult {
    let n = mdp.num_states();
    let (prob0, prob1) = qualitative(mdp, target, dir);
    let maybe: Vec<usize> = (0..n).filter(|&s| !prob0[s] && !prob1[s]).collect();
    let mut x: Vec<f64> = prob1.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut residuals = Vec::new();
    let mut converged = maybe.is_empty();
    let mut iterations = 0;
    let pool = (opts.threads > 1)
        .then(|| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.threads)
                .build()
                .ok()
        })
        .flatten();
    let mut next = vec![0.0; maybe.len()];
    while !converged && iterations < opts.max_iterations {
        let sweep = |(i, out): (usize, &mut f64)| {
            *out = bellman(mdp, maybe[i], &x, dir).0;
        };
        match &pool {
            Some(pool) => pool.install(|| next.par_iter_mut().enumerate().for_each(sweep)),
            None => next.iter_mut().enumerate().for_each(sweep),
        }
        let mut residual = 0.0f64;
        for (i, &s) in maybe.iter().enumerate() {
            residual = residual.max((next[i] - x[s]).abs());
            x[s] = next[i];
        }
        iterations += 1;
        converged =
            residual < opts.tol && tail_bound(residuals.last().copied(), residual) < opts.tol;
        residuals.push(residual);
    }
    let policy = extract_policy(mdp, target, &x, &prob0, &prob1, dir, opts.tol);
    ReachResult {
        residual: residuals.last().copied().unwrap_or(0.0),
        values: x,
        iterations,
        residuals,
        converged,
        policy,
        prob0,
        prob1,
    }
}

/// Estimated distance to the fixpoint from two consecutive residuals,
/// assuming geometric convergence at their ratio.
fn tail_bound(previous: Option<f64>, residual: f64) -> f64 {
    if residual == 0.0 {
        return 0.0;
    }
    match previous {
        Some(p) if p > 0.0 && residual < p => {
            let rate = residual / p;
            residual * rate / (1.0 - rate)
        }
        _ => f64::INFINITY,
    }
}

/// Expected value of `x` after move `m`.
#[inline]
pub fn move_value(mdp: &Mdp, m: usize, x: &[f64]) -> f64 {
    let range = mdp.branches(m);
    if range.len() > 8 {
        neumaier(range.map(|b| mdp.prob_f64(b) * x[mdp.target(b)]))
    } else {
        range.map(|b| mdp.prob_f64(b) * x[mdp.target(b)]).sum()
    }
}

fn neumaier(items: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in items {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Optimal value and the lowest-index move attaining it.
#[inline]
fn bellman(mdp: &Mdp, s: usize, x: &[f64], dir: Direction) -> (f64, usize) {
    let mut moves = mdp.moves(s);
    let first = moves.next().expect("every state has a move");
    let mut best = (move_value(mdp, first, x), first);
    for m in moves {
        let v = move_value(mdp, m, x);
        let better = match dir {
            Direction::Max => v > best.0,
            Direction::Min => v < best.0,
        };
        if better {
            best = (v, m);
        }
    }
    best
}

/// Graph-based sets of states with optimal value 0 and 1.
pub fn qualitative(mdp: &Mdp, target: &[bool], dir: Direction) -> (StateSet, StateSet) {
    match dir {
        Direction::Max => {
            let reach = exists_reach(mdp, target, &vec![true; mdp.num_states()]);
            let prob0 = reach.iter().map(|r| !r).collect();
            (prob0, prob1_exists(mdp, target))
        }
        Direction::Min => {
            let prob0 = prob0_forall(mdp, target);
            let prob1 = prob1_forall(mdp, target, &prob0);
            (prob0, prob1)
        }
    }
}

/// States that reach `goal` along some path staying in `within`.
pub fn exists_reach(mdp: &Mdp, goal: &[bool], within: &[bool]) -> StateSet {
    let n = mdp.num_states();
    let owner = mdp.move_owner();
    let (start, preds) = mdp.predecessor_moves();
    let mut seen: StateSet = (0..n).map(|s| goal[s]).collect();
    let mut stack: Vec<usize> = (0..n).filter(|&s| seen[s]).collect();
    while let Some(t) = stack.pop() {
        for &m in &preds[start[t] as usize..start[t + 1] as usize] {
            let s = owner[m as usize] as usize;
            if !seen[s] && within[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
    }
    seen
}

/// Greatest fixpoint of states that, via moves staying inside the set,
/// reach `target` with positive probability.
fn prob1_exists(mdp: &Mdp, target: &[bool]) -> StateSet {
    let n = mdp.num_states();
    let owner = mdp.move_owner();
    let (start, preds) = mdp.predecessor_moves();
    let mut z: StateSet = vec![true; n];
    loop {
        let inside: Vec<bool> = (0..mdp.num_moves())
            .map(|m| mdp.targets(m).all(|t| z[t]))
            .collect();
        let mut y: StateSet = target.to_vec();
        let mut stack: Vec<usize> = (0..n).filter(|&s| y[s]).collect();
        while let Some(t) = stack.pop() {
            for &m in &preds[start[t] as usize..start[t + 1] as usize] {
                let s = owner[m as usize] as usize;
                if !y[s] && z[s] && inside[m as usize] {
                    y[s] = true;
                    stack.push(s);
                }
            }
        }
        if y == z {
            return z;
        }
        z = y;
    }
}

/// Value-0 set for minimization: states where some scheduler never reaches
/// `target`.
fn prob0_forall(mdp: &Mdp, target: &[bool]) -> StateSet {
    let n = mdp.num_states();
    let owner = mdp.move_owner();
    let (start, preds) = mdp.predecessor_moves();
    // a move is "forced" once some successor is forced to reach target
    let mut move_hit = vec![false; mdp.num_moves()];
    let mut remaining: Vec<usize> = (0..n).map(|s| mdp.moves(s).len()).collect();
    let mut reach: StateSet = target.to_vec();
    let mut stack: Vec<usize> = (0..n).filter(|&s| reach[s]).collect();
    while let Some(t) = stack.pop() {
        for &m in &preds[start[t] as usize..start[t + 1] as usize] {
            let m = m as usize;
            if move_hit[m] {
                continue;
            }
            move_hit[m] = true;
            let s = owner[m] as usize;
            remaining[s] -= 1;
            if remaining[s] == 0 && !reach[s] {
                reach[s] = true;
                stack.push(s);
            }
        }
    }
    reach.iter().map(|r| !r).collect()
}

/// Complement of the states from which some scheduler reaches the value-0
/// set with positive probability while avoiding `target`.
fn prob1_forall(mdp: &Mdp, target: &[bool], prob0: &[bool]) -> StateSet {
    let within: Vec<bool> = target.iter().map(|t| !t).collect();
    let bad = exists_reach(mdp, prob0, &within);
    bad.iter().map(|b| !b).collect()
}

/// Picks an optimal move per state. Maximizing policies also make progress
/// toward the target among near-optimal moves.
fn extract_policy(
    mdp: &Mdp,
    target: &[bool],
    x: &[f64],
    prob0: &[bool],
    prob1: &[bool],
    dir: Direction,
    tol: f64,
) -> Vec<usize> {
    let n = mdp.num_states();
    let mut policy: Vec<usize> = (0..n).map(|s| bellman(mdp, s, x, dir).1).collect();
    if dir == Direction::Min {
        return policy;
    }
    let slack = (tol * 10.0).max(1e-12);
    let candidate = |s: usize, m: usize| -> bool {
        if prob1[s] {
            mdp.targets(m).all(|t| prob1[t])
        } else {
            move_value(mdp, m, x) >= x[s] - slack
        }
    };
    let mut ranked: StateSet = target.to_vec();
    let mut frontier: Vec<usize> = (0..n).filter(|&s| target[s]).collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for s in 0..n {
            if ranked[s] || prob0[s] {
                continue;
            }
            let choice = mdp
                .moves(s)
                .find(|&m| candidate(s, m) && mdp.targets(m).any(|t| ranked[t]));
            if let Some(m) = choice {
                policy[s] = m;
                next.push(s);
            }
        }
        for &s in &next {
            ranked[s] = true;
        }
        frontier = next;
    }
    policy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;
    use num::{BigRational, One};

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// s0 has two moves reaching the target with 3/10 and 7/10.
    fn two_moves() -> Mdp {
        let mut b = MdpBuilder::new();
        let a = b.action("a");
        let c = b.action("b");
        b.add_state(&[]);
        b.add_move(a, &[(1, r(3, 10)), (2, r(7, 10))]);
        b.add_move(c, &[(1, r(7, 10)), (2, r(3, 10))]);
        b.close_state();
        for _ in 0..2 {
            b.add_state(&[]);
            b.add_move(a, &[(b.current(), BigRational::one())]);
            b.close_state();
        }
        b.build().unwrap()
    }

    #[test]
    fn min_and_max_of_two_moves() {
        let mdp = two_moves();
        let target = vec![false, true, false];
        let opts = ReachOptions::default();
        assert!((max_reach(&mdp, &target, &opts).values[0] - 0.7).abs() < 1e-12);
        assert!((min_reach(&mdp, &target, &opts).values[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn geometric_retry_is_almost_sure() {
        let mut b = MdpBuilder::new();
        let a = b.action("a");
        b.add_state(&[]);
        b.add_move(a, &[(0, r(1, 2)), (1, r(1, 2))]);
        b.close_state();
        b.add_state(&[]);
        b.add_move(a, &[(1, BigRational::one())]);
        b.close_state();
        let mdp = b.build().unwrap();
        let res = max_reach(&mdp, &[false, true], &ReachOptions::default());
        assert_eq!(res.values[0], 1.0);
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn compensated_sum_matches_plain_for_small_support() {
        let values = [0.1, 0.2, 0.3, 0.4];
        assert!((neumaier(values.iter().copied()) - 1.0).abs() < 1e-15);
    }
}
