//! Probabilistic timed automata.

use std::collections::{BTreeSet, HashMap};

use num::{BigRational, One, Signed, Zero};

use super::constraint::Constraint;
use super::{ActionId, ClockId, ClockSet, LocationId, ModelError, MAX_CLOCKS};

pub type Probability = BigRational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub name: String,
    pub invariant: Constraint,
    pub labels: BTreeSet<String>,
}

/// One outcome of a probabilistic jump.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Branch {
    pub prob: Probability,
    pub resets: ClockSet,
    pub target: LocationId,
}

/// A distribution over `(reset set, target)` pairs. Branch order is the
/// order of declaration and is kept stable everywhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution {
    branches: Vec<Branch>,
}

impl Distribution {
    /// Checks positivity, exact unit mass and uniqueness of keys.
    pub fn new(branches: Vec<Branch>, context: &str) -> Result<Self, ModelError> {
        let invalid = |reason: String| ModelError::InvalidDistribution {
            context: context.to_string(),
            reason,
        };
        if branches.is_empty() {
            return Err(invalid("empty support".into()));
        }
        let mut total = Probability::zero();
        let mut seen = BTreeSet::new();
        for b in &branches {
            if !b.prob.is_positive() {
                return Err(invalid(format!("probability {} is not positive", b.prob)));
            }
            if !seen.insert((b.resets, b.target)) {
                return Err(invalid(format!(
                    "outcome (resets {:#x}, target #{}) listed twice",
                    b.resets.bits(),
                    b.target.0
                )));
            }
            total += &b.prob;
        }
        if !total.is_one() {
            return Err(invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Distribution { branches })
    }

    pub fn dirac(resets: ClockSet, target: LocationId) -> Self {
        Distribution {
            branches: vec![Branch {
                prob: Probability::one(),
                resets,
                target,
            }],
        }
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn is_dirac(&self) -> bool {
        self.branches.len() == 1
    }

    /// `prob(X, target)`, zero off the support.
    pub fn prob_of(&self, resets: ClockSet, target: LocationId) -> Probability {
        self.branches
            .iter()
            .find(|b| b.resets == resets && b.target == target)
            .map(|b| b.prob.clone())
            .unwrap_or_else(Probability::zero)
    }
}

/// `enab(source, action)` together with `prob(source, action)`. Pairs with no
/// edge have `enab = false`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub source: LocationId,
    pub action: ActionId,
    pub guard: Constraint,
    pub distribution: Distribution,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pta {
    clocks: Vec<String>,
    locations: Vec<Location>,
    actions: Vec<String>,
    edges: Vec<Edge>,
    initial: LocationId,
    atomic_props: BTreeSet<String>,
    outgoing: Vec<Vec<usize>>,
    by_pair: HashMap<(LocationId, ActionId), usize>,
}

impl Pta {
    pub fn clocks(&self) -> &[String] {
        &self.clocks
    }

    pub fn clock_count(&self) -> usize {
        self.clocks.len()
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn location(&self, id: LocationId) -> &Location {
        &self.locations[id.0]
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn initial(&self) -> LocationId {
        self.initial
    }

    pub fn atomic_props(&self) -> &BTreeSet<String> {
        &self.atomic_props
    }

    pub fn invariant(&self, l: LocationId) -> &Constraint {
        &self.locations[l.0].invariant
    }

    pub fn labels(&self, l: LocationId) -> &BTreeSet<String> {
        &self.locations[l.0].labels
    }

    /// Outgoing edges of `l` in declaration order.
    pub fn edges_from(&self, l: LocationId) -> impl Iterator<Item = &Edge> {
        self.outgoing[l.0].iter().map(move |&i| &self.edges[i])
    }

    pub fn edge(&self, l: LocationId, a: ActionId) -> Option<&Edge> {
        self.by_pair.get(&(l, a)).map(|&i| &self.edges[i])
    }

    /// `enab(l, a)`; `false` when no edge exists.
    pub fn enab(&self, l: LocationId, a: ActionId) -> Constraint {
        self.edge(l, a)
            .map(|e| e.guard.clone())
            .unwrap_or_else(Constraint::falsum)
    }

    pub fn prob(&self, l: LocationId, a: ActionId) -> Option<&Distribution> {
        self.edge(l, a).map(|e| &e.distribution)
    }

    pub fn location_id(&self, name: &str) -> Option<LocationId> {
        self.locations
            .iter()
            .position(|l| l.name == name)
            .map(LocationId)
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|a| a == name).map(ActionId)
    }

    pub fn clock_id(&self, name: &str) -> Option<ClockId> {
        self.clocks.iter().position(|c| c == name).map(ClockId)
    }

    /// Every invariant and guard, in location then edge order.
    pub fn constraints(&self) -> impl Iterator<Item = &Constraint> {
        self.locations
            .iter()
            .map(|l| &l.invariant)
            .chain(self.edges.iter().map(|e| &e.guard))
    }

    pub fn max_constant(&self) -> u32 {
        self.constraints()
            .map(Constraint::max_constant)
            .max()
            .unwrap_or(0)
    }

    pub fn find_diagonal(&self) -> Option<Constraint> {
        self.constraints().find_map(Constraint::find_diagonal)
    }

    /// Rebuilds a builder holding the same automaton, for transformations.
    pub fn to_builder(&self) -> PtaBuilder {
        PtaBuilder {
            clocks: self.clocks.clone(),
            locations: self.locations.clone(),
            actions: self.actions.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| PendingEdge {
                    source: e.source,
                    action: e.action,
                    guard: e.guard.clone(),
                    branches: e.distribution.branches.clone(),
                })
                .collect(),
            initial: Some(self.initial),
            atomic_props: Some(self.atomic_props.clone()),
        }
    }
}

#[derive(Debug, Clone)]
struct PendingEdge {
    source: LocationId,
    action: ActionId,
    guard: Constraint,
    branches: Vec<Branch>,
}

/// Incremental construction of a [`Pta`]; all checks happen in
/// [`PtaBuilder::build`].
#[derive(Debug, Clone, Default)]
pub struct PtaBuilder {
    clocks: Vec<String>,
    locations: Vec<Location>,
    actions: Vec<String>,
    edges: Vec<PendingEdge>,
    initial: Option<LocationId>,
    atomic_props: Option<BTreeSet<String>>,
}

impl PtaBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clock(&mut self, name: impl Into<String>) -> ClockId {
        self.clocks.push(name.into());
        ClockId(self.clocks.len() - 1)
    }

    pub fn location<I, S>(
        &mut self,
        name: impl Into<String>,
        invariant: Constraint,
        labels: I,
    ) -> LocationId
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.locations.push(Location {
            name: name.into(),
            invariant,
            labels: labels.into_iter().map(Into::into).collect(),
        });
        LocationId(self.locations.len() - 1)
    }

    pub fn location_count(&self) -> usize {
        self.locations.len()
    }

    /// Interns an action name.
    pub fn action(&mut self, name: impl Into<String>) -> ActionId {
        let name = name.into();
        if let Some(i) = self.actions.iter().position(|a| *a == name) {
            return ActionId(i);
        }
        self.actions.push(name);
        ActionId(self.actions.len() - 1)
    }

    pub fn edge(
        &mut self,
        source: LocationId,
        action: ActionId,
        guard: Constraint,
        branches: Vec<Branch>,
    ) -> &mut Self {
        self.edges.push(PendingEdge {
            source,
            action,
            guard,
            branches,
        });
        self
    }

    pub fn initial(&mut self, l: LocationId) -> &mut Self {
        self.initial = Some(l);
        self
    }

    /// Declares the atomic propositions; defaults to the union of labels.
    pub fn atomic_props<I, S>(&mut self, props: I) -> &mut Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.atomic_props = Some(props.into_iter().map(Into::into).collect());
        self
    }

    pub fn build(self) -> Result<Pta, ModelError> {
        let PtaBuilder {
            clocks,
            locations,
            actions,
            edges,
            initial,
            atomic_props,
        } = self;
        if clocks.len() > MAX_CLOCKS {
            return Err(ModelError::TooManyClocks(clocks.len()));
        }
        check_unique("clock", &clocks)?;
        check_unique(
            "location",
            &locations.iter().map(|l| l.name.clone()).collect::<Vec<_>>(),
        )?;
        check_unique("action", &actions)?;
        if locations.is_empty() {
            return Err(ModelError::Invalid(
                "a PTA needs at least one location".into(),
            ));
        }
        let initial =
            initial.ok_or_else(|| ModelError::Invalid("no initial location given".into()))?;
        if initial.0 >= locations.len() {
            return Err(ModelError::Invalid(format!(
                "initial location #{} does not exist",
                initial.0
            )));
        }
        let clock_scope = ClockSet::all(clocks.len());
        for l in &locations {
            check_clocks(&l.invariant, clock_scope, || {
                format!("invariant of `{}`", l.name)
            })?;
        }
        let atomic_props = match atomic_props {
            Some(props) => {
                for l in &locations {
                    if let Some(bad) = l.labels.iter().find(|p| !props.contains(*p)) {
                        return Err(ModelError::Unknown {
                            kind: "atomic proposition",
                            name: bad.clone(),
                        });
                    }
                }
                props
            }
            None => locations
                .iter()
                .flat_map(|l| l.labels.iter().cloned())
                .collect(),
        };
        let mut outgoing = vec![Vec::new(); locations.len()];
        let mut by_pair = HashMap::new();
        let mut built = Vec::with_capacity(edges.len());
        for (i, e) in edges.into_iter().enumerate() {
            let source = locations.get(e.source.0).ok_or_else(|| {
                ModelError::Invalid(format!("edge source #{} does not exist", e.source.0))
            })?;
            let action = actions.get(e.action.0).ok_or_else(|| {
                ModelError::Invalid(format!("edge action #{} does not exist", e.action.0))
            })?;
            let context = format!("({}, {})", source.name, action);
            check_clocks(&e.guard, clock_scope, || format!("guard of {context}"))?;
            for b in &e.branches {
                if b.target.0 >= locations.len() {
                    return Err(ModelError::Invalid(format!(
                        "branch target #{} of {context} does not exist",
                        b.target.0
                    )));
                }
                if let Some(bad) = b.resets.difference(clock_scope).max_index() {
                    return Err(ModelError::ForeignClock {
                        context: format!("resets of {context}"),
                        clock: bad,
                    });
                }
            }
            if by_pair.insert((e.source, e.action), i).is_some() {
                return Err(ModelError::Duplicate {
                    kind: "edge",
                    name: context,
                });
            }
            let distribution = Distribution::new(e.branches, &context)?;
            outgoing[e.source.0].push(i);
            built.push(Edge {
                source: e.source,
                action: e.action,
                guard: e.guard,
                distribution,
            });
        }
        Ok(Pta {
            clocks,
            locations,
            actions,
            edges: built,
            initial,
            atomic_props,
            outgoing,
            by_pair,
        })
    }
}

pub(crate) fn check_unique(kind: &'static str, names: &[String]) -> Result<(), ModelError> {
    let mut seen = BTreeSet::new();
    for name in names {
        if !seen.insert(name) {
            return Err(ModelError::Duplicate {
                kind,
                name: name.clone(),
            });
        }
    }
    Ok(())
}

pub(crate) fn check_clocks<F: FnOnce() -> String>(
    c: &Constraint,
    scope: ClockSet,
    context: F,
) -> Result<(), ModelError> {
    match c.clocks().difference(scope).max_index() {
        Some(bad) => Err(ModelError::ForeignClock {
            context: context(),
            clock: bad,
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> Probability {
        Probability::new(1.into(), 2.into())
    }

    #[test]
    fn distribution_must_sum_to_one() {
        let b = |p: Probability, t: usize| Branch {
            prob: p,
            resets: ClockSet::empty(),
            target: LocationId(t),
        };
        assert!(Distribution::new(vec![b(half(), 0), b(half(), 1)], "d").is_ok());
        let err = Distribution::new(
            vec![b(half(), 0), b(Probability::new(2.into(), 5.into()), 1)],
            "d",
        )
        .unwrap_err();
        assert!(err.to_string().contains("9/10"));
        assert!(Distribution::new(vec![b(half(), 0), b(half(), 0)], "d").is_err());
        assert!(Distribution::new(vec![], "d").is_err());
    }

    #[test]
    fn missing_edge_is_disabled() {
        let mut b = PtaBuilder::new();
        let l = b.location("l", Constraint::True, Vec::<String>::new());
        let a = b.action("a");
        b.initial(l);
        let pta = b.build().unwrap();
        assert_eq!(pta.enab(l, a), Constraint::falsum());
        assert!(pta.prob(l, a).is_none());
    }

    #[test]
    fn foreign_clock_rejected() {
        let mut b = PtaBuilder::new();
        let l = b.location("l", Constraint::upper(ClockId(1), 3), Vec::<String>::new());
        b.clock("x");
        b.initial(l);
        assert!(matches!(b.build(), Err(ModelError::ForeignClock { .. })));
    }
}
