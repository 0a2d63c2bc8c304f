//! Synchronous product of a PTA with a DTRA started in a given mode, and the
//! tick transform that turns time divergence into a Büchi condition.

pub mod tick;

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::model::validate::{
    check_determinism, check_pairing, check_totality, check_well_formed, Diagnostic,
};
use crate::model::zone::satisfiable;
use crate::model::{
    ActionId, Branch, ClockId, Constraint, Dtra, LocationId, ModeId, ModelError, Pta, PtaBuilder,
    SymbolId, Valuation,
};

pub use tick::{tick_transform, TickError, TickedPta, TICK_LABEL};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProductError {
    #[error("inputs fail validation ({} finding(s))", .0.len())]
    Precondition(Vec<Diagnostic>),
    #[error("mode #{} has no rule for symbol #{}", .mode.0, .symbol.0)]
    NotTotal { mode: ModeId, symbol: SymbolId },
    #[error("labels of location `{0}` are not a symbol of the automaton")]
    UnknownSymbol(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `h : symbols -> guards`, stored positionally against
/// [`ProductPta::symbols`].
pub type Selector = Vec<Constraint>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SelectorId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductOptions {
    /// Keep only locations reachable in the discrete location graph.
    pub reachable_only: bool,
}

impl Default for ProductOptions {
    fn default() -> Self {
        ProductOptions {
            reachable_only: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProductPta {
    pub pta: Pta,
    /// `(l, q)` for every product location.
    pub location_pairs: Vec<(LocationId, ModeId)>,
    /// `(a, h)` for every product action.
    pub action_pairs: Vec<(ActionId, SelectorId)>,
    pub selectors: Vec<Selector>,
    /// Selector domain: the symbols that label some PTA location.
    pub symbols: Vec<SymbolId>,
    /// `T_q` for every mode that was needed, in enumeration order.
    pub mode_selectors: HashMap<ModeId, Vec<SelectorId>>,
    /// Number of PTA clocks; automaton clocks follow them.
    pub pta_clocks: usize,
    pub start_mode: ModeId,
    pub initial_mode: ModeId,
    location_index: HashMap<(LocationId, ModeId), LocationId>,
    action_index: HashMap<(ActionId, SelectorId), ActionId>,
}

impl ProductPta {
    pub fn location_of(&self, l: LocationId, q: ModeId) -> Option<LocationId> {
        self.location_index.get(&(l, q)).copied()
    }

    pub fn action_of(&self, a: ActionId, h: SelectorId) -> Option<ActionId> {
        self.action_index.get(&(a, h)).copied()
    }

    pub fn selector_position(&self, b: SymbolId) -> Option<usize> {
        self.symbols.iter().position(|s| *s == b)
    }

    /// Product clock of automaton clock `y`.
    pub fn automaton_clock(&self, y: ClockId) -> ClockId {
        ClockId(y.0 + self.pta_clocks)
    }

    pub fn split_valuation(&self, v: &Valuation) -> (Valuation, Valuation) {
        (
            v.slice(0, self.pta_clocks),
            v.slice(self.pta_clocks, v.len() - self.pta_clocks),
        )
    }
}

/// The symbols that label PTA locations, in alphabet order.
pub fn label_symbols(pta: &Pta, dtra: &Dtra) -> Result<Vec<SymbolId>, ProductError> {
    let mut out = BTreeSet::new();
    for l in pta.locations() {
        let b = dtra
            .symbol_id(&l.labels)
            .ok_or_else(|| ProductError::UnknownSymbol(l.name.clone()))?;
        out.insert(b);
    }
    Ok(out.into_iter().collect())
}

/// `T_q` restricted to `symbols`: one guard per symbol, drawn from the rules
/// of `(q, b)`, in rule order with the first symbol varying slowest.
pub fn enumerate_selectors(
    dtra: &Dtra,
    q: ModeId,
    symbols: &[SymbolId],
) -> Result<Vec<Selector>, ProductError> {
    let mut choices: Vec<Vec<Constraint>> = Vec::with_capacity(symbols.len());
    for &b in symbols {
        let mut guards: Vec<Constraint> = Vec::new();
        for rule in dtra.rules_by(q, b) {
            if !guards.contains(&rule.guard) {
                guards.push(rule.guard.clone());
            }
        }
        if guards.is_empty() {
            return Err(ProductError::NotTotal { mode: q, symbol: b });
        }
        choices.push(guards);
    }
    let mut out: Vec<Selector> = vec![Vec::new()];
    for guards in &choices {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                guards.iter().map(move |g| {
                    let mut next = prefix.clone();
                    next.push(g.clone());
                    next
                })
            })
            .collect();
    }
    Ok(out)
}

/// Runs every structural check the product relies on.
pub fn preconditions(pta: &Pta, dtra: &Dtra) -> Vec<Diagnostic> {
    let mut out = check_well_formed(pta);
    out.extend(check_determinism(dtra));
    out.extend(check_totality(dtra));
    out.extend(check_pairing(pta, dtra));
    out
}

/// Mode reached from `(q, 0)` by reading the initial location's label.
pub fn initial_mode(pta: &Pta, dtra: &Dtra, q: ModeId) -> Result<ModeId, ProductError> {
    let b = dtra
        .symbol_id(pta.labels(pta.initial()))
        .ok_or_else(|| ProductError::UnknownSymbol(pta.location(pta.initial()).name.clone()))?;
    let zero = Valuation::zero(dtra.clock_count());
    match dtra.enabled_rule(q, b, &zero)? {
        Some(rule) => Ok(rule.target),
        None => Err(ProductError::NotTotal { mode: q, symbol: b }),
    }
}

struct Builder<'a> {
    pta: &'a Pta,
    dtra: &'a Dtra,
    symbols: Vec<SymbolId>,
    symbol_of_location: Vec<usize>,
    selectors: Vec<Selector>,
    selector_index: HashMap<Selector, SelectorId>,
    mode_selectors: HashMap<ModeId, Vec<SelectorId>>,
}

/// One product edge before location ids are assigned.
struct PendingEdge {
    action: ActionId,
    selector: SelectorId,
    guard: Constraint,
    branches: Vec<(Branch, ModeId)>,
}

impl Builder<'_> {
    fn selectors_of(&mut self, q: ModeId) -> Result<Vec<SelectorId>, ProductError> {
        if let Some(ids) = self.mode_selectors.get(&q) {
            return Ok(ids.clone());
        }
        let mut ids = Vec::new();
        for h in enumerate_selectors(self.dtra, q, &self.symbols)? {
            let next = SelectorId(self.selectors.len());
            let id = *self.selector_index.entry(h.clone()).or_insert(next);
            if id == next {
                self.selectors.push(h);
            }
            ids.push(id);
        }
        self.mode_selectors.insert(q, ids.clone());
        Ok(ids)
    }

    fn shift(&self, c: &Constraint) -> Constraint {
        let offset = self.pta.clock_count();
        c.map_clocks(|y| ClockId(y.0 + offset))
    }

    /// Product edges leaving `(l, q)`, pruned to satisfiable guards.
    fn edges_from(&mut self, l: LocationId, q: ModeId) -> Result<Vec<PendingEdge>, ProductError> {
        let clocks = self.pta.clock_count() + self.dtra.clock_count();
        let selectors = self.selectors_of(q)?;
        let mut out = Vec::new();
        for edge in self.pta.edges_from(l) {
            for &h in &selectors {
                let selector = &self.selectors[h.0];
                let guard = Constraint::conjunction_simplified(
                    std::iter::once(edge.guard.clone())
                        .chain(selector.iter().map(|g| self.shift(g))),
                );
                let live = self.pta.invariant(l).clone().and(guard.clone());
                if !satisfiable(&live, clocks)? {
                    continue;
                }
                let mut branches = Vec::new();
                for b in edge.distribution.branches() {
                    let pos = self.symbol_of_location[b.target.0];
                    let symbol = self.symbols[pos];
                    let wanted = &selector[pos];
                    let rule = self
                        .dtra
                        .rules_by(q, symbol)
                        .find(|r| r.guard == *wanted)
                        .expect("selector guards come from rules");
                    branches.push((
                        Branch {
                            prob: b.prob.clone(),
                            resets: b.resets.union(rule.resets.shifted(self.pta.clock_count())),
                            target: b.target,
                        },
                        rule.target,
                    ));
                }
                out.push(PendingEdge {
                    action: edge.action,
                    selector: h,
                    guard,
                    branches,
                });
            }
        }
        Ok(out)
    }
}

/// Builds `C ⊗ A_q`.
pub fn build_product(
    pta: &Pta,
    dtra: &Dtra,
    q: ModeId,
    options: ProductOptions,
) -> Result<ProductPta, ProductError> {
    let diagnostics = preconditions(pta, dtra);
    if !diagnostics.is_empty() {
        return Err(ProductError::Precondition(diagnostics));
    }
    let symbols = label_symbols(pta, dtra)?;
    let symbol_of_location = pta
        .locations()
        .iter()
        .map(|l| {
            let b = dtra.symbol_id(&l.labels).expect("checked by pairing");
            symbols
                .iter()
                .position(|s| *s == b)
                .expect("collected above")
        })
        .collect();
    let q_star = initial_mode(pta, dtra, q)?;
    let mut builder = Builder {
        pta,
        dtra,
        symbols,
        symbol_of_location,
        selectors: Vec::new(),
        selector_index: HashMap::new(),
        mode_selectors: HashMap::new(),
    };

    // discover locations and their edges
    let mut pairs: Vec<(LocationId, ModeId)> = Vec::new();
    let mut index: HashMap<(LocationId, ModeId), usize> = HashMap::new();
    let mut pending: Vec<Vec<PendingEdge>> = Vec::new();
    if options.reachable_only {
        let start = (pta.initial(), q_star);
        index.insert(start, 0);
        pairs.push(start);
        let mut queue = VecDeque::from([0usize]);
        pending.push(Vec::new());
        while let Some(i) = queue.pop_front() {
            let (l, m) = pairs[i];
            let edges = builder.edges_from(l, m)?;
            for e in &edges {
                for (b, m2) in &e.branches {
                    let key = (b.target, *m2);
                    if let std::collections::hash_map::Entry::Vacant(e) = index.entry(key) {
                        e.insert(pairs.len());
                        pairs.push(key);
                        pending.push(Vec::new());
                        queue.push_back(pairs.len() - 1);
                    }
                }
            }
            pending[i] = edges;
        }
    } else {
        for l in 0..pta.locations().len() {
            for m in 0..dtra.modes().len() {
                index.insert((LocationId(l), ModeId(m)), pairs.len());
                pairs.push((LocationId(l), ModeId(m)));
            }
        }
        for &(l, m) in &pairs {
            pending.push(builder.edges_from(l, m)?);
        }
    }

    let mut out = PtaBuilder::new();
    for name in pta.clocks().iter().chain(dtra.clocks()) {
        out.clock(name.clone());
    }
    out.atomic_props(dtra.modes().iter().cloned());
    for &(l, m) in &pairs {
        let loc = pta.location(l);
        out.location(
            format!("{}|{}", loc.name, dtra.mode_name(m)),
            loc.invariant.clone(),
            [dtra.mode_name(m).to_string()],
        );
    }
    out.initial(LocationId(index[&(pta.initial(), q_star)]));
    let mut action_pairs = Vec::new();
    let mut action_index = HashMap::new();
    for (i, edges) in pending.into_iter().enumerate() {
        for e in edges {
            let id = *action_index
                .entry((e.action, e.selector))
                .or_insert_with(|| {
                    action_pairs.push((e.action, e.selector));
                    out.action(format!("{}#h{}", pta.actions()[e.action.0], e.selector.0))
                });
            let branches = e
                .branches
                .into_iter()
                .map(|(b, m2)| Branch {
                    target: LocationId(index[&(b.target, m2)]),
                    ..b
                })
                .collect();
            out.edge(LocationId(i), id, e.guard, branches);
        }
    }
    let product = out.build()?;
    Ok(ProductPta {
        pta: product,
        location_pairs: pairs.clone(),
        action_pairs,
        selectors: builder.selectors,
        symbols: builder.symbols,
        mode_selectors: builder.mode_selectors,
        pta_clocks: pta.clock_count(),
        start_mode: q,
        initial_mode: q_star,
        location_index: index.into_iter().map(|(k, v)| (k, LocationId(v))).collect(),
        action_index,
    })
}
