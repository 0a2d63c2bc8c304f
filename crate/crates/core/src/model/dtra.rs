//! Timed automata over set-valued symbols, with Rabin acceptance.

use std::collections::{BTreeSet, HashMap};

use super::constraint::Constraint;
use super::pta::{check_clocks, check_unique};
use super::valuation::Valuation;
use super::{ClockId, ClockSet, ModeId, ModelError, SymbolId, MAX_CLOCKS};

/// A symbol is a set of atomic propositions.
pub type Symbol = BTreeSet<String>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub source: ModeId,
    pub symbol: SymbolId,
    pub guard: Constraint,
    pub resets: ClockSet,
    pub target: ModeId,
}

/// `(H, K)`: a run is accepted by the pair when it visits `avoid` finitely
/// often and `visit` infinitely often.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct RabinPair {
    pub avoid: BTreeSet<ModeId>,
    pub visit: BTreeSet<ModeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dtra {
    modes: Vec<String>,
    alphabet: Vec<Symbol>,
    clocks: Vec<String>,
    rules: Vec<Rule>,
    initial: ModeId,
    rabin: Vec<RabinPair>,
    by_key: HashMap<(ModeId, SymbolId), Vec<usize>>,
}

impl Dtra {
    pub fn modes(&self) -> &[String] {
        &self.modes
    }

    pub fn mode_name(&self, q: ModeId) -> &str {
        &self.modes[q.0]
    }

    pub fn alphabet(&self) -> &[Symbol] {
        &self.alphabet
    }

    pub fn symbol(&self, b: SymbolId) -> &Symbol {
        &self.alphabet[b.0]
    }

    pub fn clocks(&self) -> &[String] {
        &self.clocks
    }

    pub fn clock_count(&self) -> usize {
        self.clocks.len()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn initial(&self) -> ModeId {
        self.initial
    }

    pub fn rabin(&self) -> &[RabinPair] {
        &self.rabin
    }

    /// Rules `(q, b, ., ., .)` in declaration order.
    pub fn rules_by(&self, q: ModeId, b: SymbolId) -> impl Iterator<Item = &Rule> {
        self.by_key
            .get(&(q, b))
            .into_iter()
            .flatten()
            .map(move |&i| &self.rules[i])
    }

    pub fn rule_indices(&self, q: ModeId, b: SymbolId) -> &[usize] {
        self.by_key.get(&(q, b)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn mode_id(&self, name: &str) -> Option<ModeId> {
        self.modes.iter().position(|m| m == name).map(ModeId)
    }

    pub fn symbol_id(&self, symbol: &Symbol) -> Option<SymbolId> {
        self.alphabet.iter().position(|s| s == symbol).map(SymbolId)
    }

    pub fn clock_id(&self, name: &str) -> Option<ClockId> {
        self.clocks.iter().position(|c| c == name).map(ClockId)
    }

    /// The first rule from `q` on `b` whose guard holds at `valuation`. For
    /// deterministic automata it is the only one.
    pub fn enabled_rule(
        &self,
        q: ModeId,
        b: SymbolId,
        valuation: &Valuation,
    ) -> Result<Option<&Rule>, ModelError> {
        for rule in self.rules_by(q, b) {
            if rule.guard.eval(valuation)? {
                return Ok(Some(rule));
            }
        }
        Ok(None)
    }

    pub fn max_constant(&self) -> u32 {
        self.rules
            .iter()
            .map(|r| r.guard.max_constant())
            .max()
            .unwrap_or(0)
    }

    pub fn find_diagonal(&self) -> Option<Constraint> {
        self.rules.iter().find_map(|r| r.guard.find_diagonal())
    }

    pub fn to_builder(&self) -> DtraBuilder {
        DtraBuilder {
            modes: self.modes.clone(),
            alphabet: self.alphabet.clone(),
            clocks: self.clocks.clone(),
            rules: self.rules.clone(),
            initial: Some(self.initial),
            rabin: self.rabin.clone(),
        }
    }
}

/// All subsets of `props`, smallest first, then lexicographically.
pub fn powerset<S: AsRef<str>>(props: &[S]) -> Vec<Symbol> {
    let sorted: BTreeSet<String> = props.iter().map(|p| p.as_ref().to_string()).collect();
    let sorted: Vec<String> = sorted.into_iter().collect();
    let n = sorted.len();
    let mut out: Vec<Symbol> = (0..1u64 << n)
        .map(|mask| {
            (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| sorted[i].clone())
                .collect()
        })
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

#[derive(Debug, Clone, Default)]
pub struct DtraBuilder {
    modes: Vec<String>,
    alphabet: Vec<Symbol>,
    clocks: Vec<String>,
    rules: Vec<Rule>,
    initial: Option<ModeId>,
    rabin: Vec<RabinPair>,
}

impl DtraBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn mode(&mut self, name: impl Into<String>) -> ModeId {
        self.modes.push(name.into());
        ModeId(self.modes.len() - 1)
    }

    pub fn mode_names(&self) -> &[String] {
        &self.modes
    }

    pub fn clock(&mut self, name: impl Into<String>) -> ClockId {
        self.clocks.push(name.into());
        ClockId(self.clocks.len() - 1)
    }

    pub fn clock_count(&self) -> usize {
        self.clocks.len()
    }

    /// Interns a symbol.
    pub fn symbol(&mut self, symbol: Symbol) -> SymbolId {
        if let Some(i) = self.alphabet.iter().position(|s| *s == symbol) {
            return SymbolId(i);
        }
        self.alphabet.push(symbol);
        SymbolId(self.alphabet.len() - 1)
    }

    pub fn symbol_of<I, S>(&mut self, props: I) -> SymbolId
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.symbol(props.into_iter().map(Into::into).collect())
    }

    pub fn alphabet(&self) -> &[Symbol] {
        &self.alphabet
    }

    pub fn rule(
        &mut self,
        source: ModeId,
        symbol: SymbolId,
        guard: Constraint,
        resets: ClockSet,
        target: ModeId,
    ) -> &mut Self {
        self.rules.push(Rule {
            source,
            symbol,
            guard,
            resets,
            target,
        });
        self
    }

    pub fn push_rule(&mut self, rule: Rule) -> &mut Self {
        self.rules.push(rule);
        self
    }

    pub fn initial(&mut self, q: ModeId) -> &mut Self {
        self.initial = Some(q);
        self
    }

    pub fn rabin_pair<A, K>(&mut self, avoid: A, visit: K) -> &mut Self
    where
        A: IntoIterator<Item = ModeId>,
        K: IntoIterator<Item = ModeId>,
    {
        self.rabin.push(RabinPair {
            avoid: avoid.into_iter().collect(),
            visit: visit.into_iter().collect(),
        });
        self
    }

    pub fn set_rabin(&mut self, pairs: Vec<RabinPair>) -> &mut Self {
        self.rabin = pairs;
        self
    }

    pub fn build(self) -> Result<Dtra, ModelError> {
        let DtraBuilder {
            modes,
            alphabet,
            clocks,
            rules,
            initial,
            rabin,
        } = self;
        if clocks.len() > MAX_CLOCKS {
            return Err(ModelError::TooManyClocks(clocks.len()));
        }
        check_unique("clock", &clocks)?;
        check_unique("mode", &modes)?;
        if modes.is_empty() {
            return Err(ModelError::Invalid(
                "an automaton needs at least one mode".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for s in &alphabet {
            if !seen.insert(s) {
                return Err(ModelError::Duplicate {
                    kind: "symbol",
                    name: format!("{s:?}"),
                });
            }
        }
        let initial = initial.ok_or_else(|| ModelError::Invalid("no initial mode given".into()))?;
        let mode_ok = |q: ModeId| q.0 < modes.len();
        if !mode_ok(initial) {
            return Err(ModelError::Invalid(format!(
                "initial mode #{} does not exist",
                initial.0
            )));
        }
        let scope = ClockSet::all(clocks.len());
        let mut by_key: HashMap<(ModeId, SymbolId), Vec<usize>> = HashMap::new();
        for (i, r) in rules.iter().enumerate() {
            if !mode_ok(r.source) || !mode_ok(r.target) {
                return Err(ModelError::Invalid(format!(
                    "rule #{i} references a missing mode"
                )));
            }
            if r.symbol.0 >= alphabet.len() {
                return Err(ModelError::Invalid(format!(
                    "rule #{i} references a missing symbol"
                )));
            }
            check_clocks(&r.guard, scope, || format!("guard of rule #{i}"))?;
            if let Some(bad) = r.resets.difference(scope).max_index() {
                return Err(ModelError::ForeignClock {
                    context: format!("resets of rule #{i}"),
                    clock: bad,
                });
            }
            by_key.entry((r.source, r.symbol)).or_default().push(i);
        }
        for pair in &rabin {
            if pair.avoid.iter().chain(&pair.visit).any(|q| !mode_ok(*q)) {
                return Err(ModelError::Invalid(
                    "Rabin pair references a missing mode".into(),
                ));
            }
        }
        Ok(Dtra {
            modes,
            alphabet,
            clocks,
            rules,
            initial,
            rabin,
            by_key,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powerset_order() {
        let sets = powerset(&["beta", "alpha"]);
        let names: Vec<Vec<&str>> = sets
            .iter()
            .map(|s| s.iter().map(String::as_str).collect())
            .collect();
        assert_eq!(
            names,
            vec![vec![], vec!["alpha"], vec!["beta"], vec!["alpha", "beta"]]
        );
    }

    #[test]
    fn rules_are_indexed() {
        let mut b = DtraBuilder::new();
        let q = b.mode("q");
        let y = b.clock("y");
        let s = b.symbol_of(["a"]);
        b.rule(q, s, Constraint::upper(y, 2), ClockSet::empty(), q)
            .rule(
                q,
                s,
                Constraint::strict_lower(2, y),
                ClockSet::singleton(y),
                q,
            )
            .initial(q);
        let a = b.build().unwrap();
        assert_eq!(a.rules_by(q, s).count(), 2);
        let v = Valuation::from_integers(&[3]).unwrap();
        let r = a.enabled_rule(q, s, &v).unwrap().unwrap();
        assert_eq!(r.resets, ClockSet::singleton(y));
    }
}
