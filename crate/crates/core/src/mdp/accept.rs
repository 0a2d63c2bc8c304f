use super::mec::{mec_decompose, mec_decompose_within, EndComponent};
use super::{Mdp, StateSet};

/// A Rabin pair over MDP states: avoid `avoid` forever, visit `visit`
/// infinitely often.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelPair {
    pub avoid: StateSet,
    pub visit: StateSet,
}

impl LabelPair {
    /// Builds the pair from label ids: states carrying any of `avoid` or
    /// any of `visit`.
    pub fn from_labels(mdp: &Mdp, avoid: &[u32], visit: &[u32]) -> Self {
        LabelPair {
            avoid: mdp.states_with_any(avoid),
            visit: mdp.states_with_any(visit),
        }
    }
}

/// A Streett pair: visiting `request` infinitely often requires visiting
/// `response` infinitely often.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreettPair {
    pub request: StateSet,
    pub response: StateSet,
}

/// States of end components satisfying some Rabin pair, and touching `tick`
/// when given.
pub fn rabin_accepting_states(mdp: &Mdp, pairs: &[LabelPair], tick: Option<&[bool]>) -> StateSet {
    let n = mdp.num_states();
    let mut out = vec![false; n];
    for pair in pairs {
        let allowed: Vec<bool> = pair.avoid.iter().map(|a| !a).collect();
        for ec in mec_decompose_within(mdp, &allowed) {
            if ec.touches(&pair.visit) && tick.is_none_or(|t| ec.touches(t)) {
                for &s in &ec.states {
                    out[s] = true;
                }
            }
        }
    }
    out
}

/// States of end components satisfying every Streett pair, and touching
/// `tick` when given.
pub fn streett_accepting_states(
    mdp: &Mdp,
    pairs: &[StreettPair],
    tick: Option<&[bool]>,
) -> StateSet {
    let n = mdp.num_states();
    let mut out = vec![false; n];
    let mut work: Vec<EndComponent> = mec_decompose(mdp);
    while let Some(ec) = work.pop() {
        if tick.is_some_and(|t| !ec.touches(t)) {
            continue;
        }
        let violated: Vec<&StreettPair> = pairs
            .iter()
            .filter(|p| ec.touches(&p.request) && !ec.touches(&p.response))
            .collect();
        if violated.is_empty() {
            for &s in &ec.states {
                out[s] = true;
            }
            continue;
        }
        let mut allowed = vec![false; n];
        for &s in &ec.states {
            allowed[s] = !violated.iter().any(|p| p.request[s]);
        }
        work.extend(mec_decompose_within(mdp, &allowed));
    }
    out
}

/// Whether a set of states is Rabin-accepting for label-level pairs.
pub fn rabin_accepts(inf: &[bool], pairs: &[LabelPair]) -> bool {
    pairs.iter().any(|p| {
        let avoids = inf.iter().zip(&p.avoid).all(|(i, a)| !(*i && *a));
        let visits = inf.iter().zip(&p.visit).any(|(i, v)| *i && *v);
        avoids && visits
    })
}
