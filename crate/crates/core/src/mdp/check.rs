use std::time::{Duration, Instant};

use thiserror::Error;

use super::accept::{rabin_accepting_states, streett_accepting_states, LabelPair, StreettPair};
use super::reach::{max_reach, ReachOptions, ReachResult};
use super::{count, Mdp, StateSet};
use crate::model::validate::{complete_to_total, CompletionError};
use crate::model::{Dtra, ModeId, Pta};
use crate::product::{
    build_product, tick_transform, ProductError, ProductOptions, ProductPta, TickError, TickedPta,
    TICK_LABEL,
};
use crate::region::{build_region_mdp, RegionError, RegionMdp, RegionOptions};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("completion: {0}")]
    Completion(#[from] CompletionError),
    #[error("product: {0}")]
    Product(#[from] ProductError),
    #[error("tick transform: {0}")]
    Tick(#[from] TickError),
    #[error("region MDP: {0}")]
    Region(#[from] RegionError),
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Complete a non-total automaton with a rejecting sink first.
    pub complete: bool,
    pub product: ProductOptions,
    pub region: RegionOptions,
    pub reach: ReachOptions,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            complete: true,
            product: ProductOptions::default(),
            region: RegionOptions::default(),
            reach: ReachOptions::default(),
        }
    }
}

/// Every intermediate model of the pipeline.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub dtra: Dtra,
    pub product: ProductPta,
    pub ticked: TickedPta,
    pub region: RegionMdp,
}

/// Rabin pairs as label names: `(avoid, visit)`.
pub type NamedPairs = Vec<(Vec<String>, Vec<String>)>;

/// Result of the acceptance analysis of one MDP.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub p_min: f64,
    pub p_max: f64,
    pub states: usize,
    pub moves: usize,
    /// States of end components accepted by some Rabin pair and ticking.
    pub rabin_states: StateSet,
    /// States of end components satisfying the complementary Streett
    /// condition and ticking.
    pub streett_states: StateSet,
    /// Maximal probability of reaching `streett_states`; `p_min` is one
    /// minus its initial value.
    pub min_solution: ReachResult,
    pub max_solution: ReachResult,
    pub t_min: Duration,
    pub t_max: Duration,
}

impl CheckResult {
    pub fn residual(&self) -> f64 {
        self.min_solution.residual.max(self.max_solution.residual)
    }

    pub fn converged(&self) -> bool {
        self.min_solution.converged && self.max_solution.converged
    }
}

pub fn build_pipeline(
    pta: &Pta,
    dtra: &Dtra,
    q: ModeId,
    opts: &CheckOptions,
) -> Result<Pipeline, CheckError> {
    let dtra = if opts.complete {
        complete_to_total(dtra)?
    } else {
        dtra.clone()
    };
    let product = build_product(pta, &dtra, q, opts.product)?;
    let ticked = tick_transform(&product.pta)?;
    let region = build_region_mdp(&ticked.pta, &opts.region)?;
    Ok(Pipeline {
        dtra,
        product,
        ticked,
        region,
    })
}

/// Rabin pairs of `dtra` as mode names.
pub fn named_pairs(dtra: &Dtra) -> NamedPairs {
    let names = |set: &std::collections::BTreeSet<ModeId>| {
        set.iter().map(|q| dtra.mode_name(*q).to_string()).collect()
    };
    dtra.rabin()
        .iter()
        .map(|p| (names(&p.avoid), names(&p.visit)))
        .collect()
}

/// Minimal and maximal probability over time-divergent schedulers of the
/// pipeline for `C`, `A` started in `q`.
pub fn check_pta(
    pta: &Pta,
    dtra: &Dtra,
    q: ModeId,
    opts: &CheckOptions,
) -> Result<CheckResult, CheckError> {
    let pipeline = build_pipeline(pta, dtra, q, opts)?;
    Ok(analyze(
        &pipeline.region.mdp,
        &named_pairs(&pipeline.dtra),
        Some(TICK_LABEL),
        &opts.reach,
    ))
}

/// Acceptance probabilities of an MDP labelled with automaton modes. With a
/// tick label, only end components visiting it count.
pub fn analyze(
    mdp: &Mdp,
    pairs: &NamedPairs,
    tick: Option<&str>,
    reach: &ReachOptions,
) -> CheckResult {
    let ids =
        |names: &[String]| -> Vec<u32> { names.iter().filter_map(|n| mdp.label_id(n)).collect() };
    let tick_set: Option<StateSet> = tick.map(|t| match mdp.label_id(t) {
        Some(id) => mdp.states_with_any(&[id]),
        None => vec![false; mdp.num_states()],
    });
    let rabin: Vec<LabelPair> = pairs
        .iter()
        .map(|(h, k)| LabelPair::from_labels(mdp, &ids(h), &ids(k)))
        .collect();
    let streett: Vec<StreettPair> = rabin
        .iter()
        .map(|p| StreettPair {
            request: p.visit.clone(),
            response: p.avoid.clone(),
        })
        .collect();

    let start = Instant::now();
    let rabin_states = rabin_accepting_states(mdp, &rabin, tick_set.as_deref());
    let max_solution = max_reach(mdp, &rabin_states, reach);
    let t_max = start.elapsed();

    let start = Instant::now();
    let streett_states = streett_accepting_states(mdp, &streett, tick_set.as_deref());
    let min_solution = max_reach(mdp, &streett_states, reach);
    let t_min = start.elapsed();

    let init = mdp.initial();
    let p_max = max_solution.values[init];
    let p_min = 1.0 - min_solution.values[init];
    debug_assert!(count(&rabin_states) <= mdp.num_states());
    CheckResult {
        p_min,
        p_max,
        states: mdp.num_states(),
        moves: mdp.num_moves(),
        rabin_states,
        streett_states,
        min_solution,
        max_solution,
        t_min,
        t_max,
    }
}
