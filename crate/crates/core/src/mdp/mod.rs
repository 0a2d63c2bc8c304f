//! Finite Markov decision processes with rational transition probabilities,
//! and the analyses run on them.

pub mod accept;
pub mod check;
pub mod exact;
pub mod mec;
pub mod reach;

use std::collections::HashMap;

use num::{BigRational, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use accept::{rabin_accepting_states, streett_accepting_states, LabelPair, StreettPair};
pub use check::{
    analyze, build_pipeline, check_pta, named_pairs, CheckError, CheckOptions, CheckResult,
    NamedPairs, Pipeline,
};
pub use exact::{exact_reach, exact_reach_capped, ExactError, ExactResult};
pub use mec::{mec_decompose, mec_decompose_within, EndComponent};
pub use reach::{max_reach, min_reach, Direction, ReachOptions, ReachResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MdpError {
    #[error("state {state}: move {index} has probabilities summing to {sum}")]
    BadDistribution {
        state: usize,
        index: usize,
        sum: String,
    },
    #[error("state {0} has no moves")]
    NoMoves(usize),
    #[error("transition to unknown state {0}")]
    UnknownState(usize),
    #[error("state {0} was closed out of order")]
    OutOfOrder(usize),
}

/// An MDP stored in compressed sparse rows. States own a contiguous range of
/// moves and moves own a contiguous range of branches.
#[derive(Debug, Clone)]
pub struct Mdp {
    state_moves: Vec<u32>,
    move_branches: Vec<u32>,
    move_action: Vec<u32>,
    branch_target: Vec<u32>,
    branch_prob: Vec<u32>,
    probs: Vec<BigRational>,
    probs_f64: Vec<f64>,
    action_names: Vec<String>,
    label_names: Vec<String>,
    label_sets: Vec<Vec<u32>>,
    state_labels: Vec<u32>,
    initial: u32,
}

impl Mdp {
    pub fn num_states(&self) -> usize {
        self.state_labels.len()
    }

    pub fn num_moves(&self) -> usize {
        self.move_action.len()
    }

    pub fn num_branches(&self) -> usize {
        self.branch_target.len()
    }

    pub fn initial(&self) -> usize {
        self.initial as usize
    }

    /// Global move indices of `s`.
    #[inline]
    pub fn moves(&self, s: usize) -> std::ops::Range<usize> {
        self.state_moves[s] as usize..self.state_moves[s + 1] as usize
    }

    #[inline]
    pub fn branches(&self, m: usize) -> std::ops::Range<usize> {
        self.move_branches[m] as usize..self.move_branches[m + 1] as usize
    }

    #[inline]
    pub fn target(&self, branch: usize) -> usize {
        self.branch_target[branch] as usize
    }

    #[inline]
    pub fn prob_f64(&self, branch: usize) -> f64 {
        self.probs_f64[self.branch_prob[branch] as usize]
    }

    pub fn prob(&self, branch: usize) -> &BigRational {
        &self.probs[self.branch_prob[branch] as usize]
    }

    /// `(target, probability)` pairs of move `m`.
    pub fn successors(&self, m: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.branches(m)
            .map(move |b| (self.target(b), self.prob_f64(b)))
    }

    pub fn targets(&self, m: usize) -> impl Iterator<Item = usize> + '_ {
        self.branches(m).map(move |b| self.target(b))
    }

    pub fn move_action(&self, m: usize) -> usize {
        self.move_action[m] as usize
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn label_id(&self, name: &str) -> Option<u32> {
        self.label_names
            .iter()
            .position(|l| l == name)
            .map(|i| i as u32)
    }

    pub fn labels(&self, s: usize) -> &[u32] {
        &self.label_sets[self.state_labels[s] as usize]
    }

    pub fn has_label(&self, s: usize, label: u32) -> bool {
        self.labels(s).binary_search(&label).is_ok()
    }

    /// States carrying any label of `labels`.
    pub fn states_with_any(&self, labels: &[u32]) -> Vec<bool> {
        let hit: Vec<bool> = self
            .label_sets
            .iter()
            .map(|set| set.iter().any(|l| labels.contains(l)))
            .collect();
        self.state_labels.iter().map(|&i| hit[i as usize]).collect()
    }

    /// Predecessor lists: for every state, the moves with a branch into it.
    pub fn predecessor_moves(&self) -> (Vec<u32>, Vec<u32>) {
        let n = self.num_states();
        let mut counts = vec![0u32; n + 1];
        for b in 0..self.num_branches() {
            counts[self.target(b) + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut preds = vec![0u32; self.num_branches()];
        for s in 0..n {
            for m in self.moves(s) {
                for b in self.branches(m) {
                    let t = self.target(b);
                    preds[fill[t] as usize] = m as u32;
                    fill[t] += 1;
                }
            }
        }
        (counts, preds)
    }

    /// Owning state of every move.
    pub fn move_owner(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.num_moves()];
        for s in 0..self.num_states() {
            for m in self.moves(s) {
                out[m] = s as u32;
            }
        }
        out
    }
}

/// Builds an [`Mdp`] state by state; moves must be added in state order.
#[derive(Debug, Clone)]
pub struct MdpBuilder {
    mdp: Mdp,
    prob_index: HashMap<BigRational, u32>,
    label_index: HashMap<Vec<u32>, u32>,
    action_index: HashMap<String, u32>,
}

impl Default for MdpBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl MdpBuilder {
    pub fn new() -> Self {
        MdpBuilder {
            mdp: Mdp {
                state_moves: vec![0],
                move_branches: vec![0],
                move_action: Vec::new(),
                branch_target: Vec::new(),
                branch_prob: Vec::new(),
                probs: Vec::new(),
                probs_f64: Vec::new(),
                action_names: Vec::new(),
                label_names: Vec::new(),
                label_sets: Vec::new(),
                state_labels: Vec::new(),
                initial: 0,
            },
            prob_index: HashMap::new(),
            label_index: HashMap::new(),
            action_index: HashMap::new(),
        }
    }

    pub fn label(&mut self, name: &str) -> u32 {
        if let Some(i) = self.mdp.label_names.iter().position(|l| l == name) {
            return i as u32;
        }
        self.mdp.label_names.push(name.to_string());
        (self.mdp.label_names.len() - 1) as u32
    }

    pub fn action(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.action_index.get(name) {
            return i;
        }
        let id = self.mdp.action_names.len() as u32;
        self.mdp.action_names.push(name.to_string());
        self.action_index.insert(name.to_string(), id);
        id
    }

    /// Declares a state; returns its index.
    pub fn add_state(&mut self, labels: &[u32]) -> usize {
        let mut key = labels.to_vec();
        key.sort_unstable();
        key.dedup();
        let next = self.mdp.label_sets.len() as u32;
        let id = *self.label_index.entry(key.clone()).or_insert(next);
        if id == next {
            self.mdp.label_sets.push(key);
        }
        self.mdp.state_labels.push(id);
        self.mdp.state_labels.len() - 1
    }

    pub fn num_states(&self) -> usize {
        self.mdp.state_labels.len()
    }

    /// The state whose moves are being added.
    pub fn current(&self) -> usize {
        self.mdp.state_moves.len() - 1
    }

    fn intern(&mut self, p: &BigRational) -> u32 {
        if let Some(&i) = self.prob_index.get(p) {
            return i;
        }
        let id = self.mdp.probs.len() as u32;
        self.mdp.probs.push(p.clone());
        self.mdp
            .probs_f64
            .push(p.to_f64().expect("probabilities are in [0, 1]"));
        self.prob_index.insert(p.clone(), id);
        id
    }

    /// Adds a move to the current state. Branches to the same target are
    /// merged; order of first occurrence is kept.
    pub fn add_move(&mut self, action: u32, branches: &[(usize, BigRational)]) {
        let mut merged: Vec<(usize, BigRational)> = Vec::with_capacity(branches.len());
        for (t, p) in branches {
            match merged.iter_mut().find(|(u, _)| u == t) {
                Some((_, q)) => *q += p,
                None => merged.push((*t, p.clone())),
            }
        }
        for (t, p) in &merged {
            let id = self.intern(p);
            self.mdp.branch_target.push(*t as u32);
            self.mdp.branch_prob.push(id);
        }
        self.mdp.move_action.push(action);
        self.mdp
            .move_branches
            .push(self.mdp.branch_target.len() as u32);
    }

    /// Closes the current state and moves on to the next.
    pub fn close_state(&mut self) {
        self.mdp.state_moves.push(self.mdp.move_action.len() as u32);
    }

    pub fn set_initial(&mut self, s: usize) {
        self.mdp.initial = s as u32;
    }

    pub fn build(self) -> Result<Mdp, MdpError> {
        let mdp = self.mdp;
        let n = mdp.state_labels.len();
        if mdp.state_moves.len() != n + 1 {
            return Err(MdpError::OutOfOrder(mdp.state_moves.len() - 1));
        }
        for s in 0..n {
            if mdp.moves(s).is_empty() {
                return Err(MdpError::NoMoves(s));
            }
            for (k, m) in mdp.moves(s).enumerate() {
                let mut sum = BigRational::zero();
                for b in mdp.branches(m) {
                    if mdp.target(b) >= n {
                        return Err(MdpError::UnknownState(mdp.target(b)));
                    }
                    let p = mdp.prob(b);
                    if !p.is_positive() {
                        return Err(MdpError::BadDistribution {
                            state: s,
                            index: k,
                            sum: p.to_string(),
                        });
                    }
                    sum += p;
                }
                if !sum.is_one() {
                    return Err(MdpError::BadDistribution {
                        state: s,
                        index: k,
                        sum: sum.to_string(),
                    });
                }
            }
        }
        if n > 0 && mdp.initial as usize >= n {
            return Err(MdpError::UnknownState(mdp.initial as usize));
        }
        Ok(mdp)
    }
}

/// Bit set over states.
pub type StateSet = Vec<bool>;

pub fn count(set: &[bool]) -> usize {
    set.iter().filter(|b| **b).count()
}
