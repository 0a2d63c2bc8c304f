//! Structural checks: well-formedness of PTAs, determinism and totality of
//! DTRAs, compatibility of a PTA/DTRA pair, and completion to totality.

use std::fmt;

use thiserror::Error;

use super::constraint::Constraint;
use super::dtra::{Dtra, Rule};
use super::pta::Pta;
use super::valuation::Valuation;
use super::zone::ZoneSet;
use super::{ActionId, ClockSet, ClockSetDisplay, LocationId, ModeId, ModelError, SymbolId};

/// A single finding of a structural check.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Diagnostic {
    /// Some state enabling `action` in `location` jumps, via branch
    /// `(resets, target)`, outside `inv(target)`.
    WellFormedness {
        location: LocationId,
        action: ActionId,
        resets: ClockSet,
        target: LocationId,
    },
    /// The zero valuation violates the initial location's invariant.
    InitialInvariant { location: LocationId },
    /// Two rules (by index) overlap on the same mode and symbol.
    Determinism { first: usize, second: usize },
    /// No rule covers some valuation for this mode and symbol.
    Totality { mode: ModeId, symbol: SymbolId },
    /// The labels of a PTA location are not a symbol of the automaton.
    UnknownSymbol { location: LocationId },
    /// A clock name is shared between the PTA and the automaton.
    SharedClock { name: String },
}

impl Diagnostic {
    pub fn render(&self, pta: Option<&Pta>, dtra: Option<&Dtra>) -> String {
        let loc = |l: &LocationId| match pta {
            Some(p) => p.location(*l).name.clone(),
            None => format!("#{}", l.0),
        };
        let mode = |q: &ModeId| match dtra {
            Some(a) => a.mode_name(*q).to_string(),
            None => format!("#{}", q.0),
        };
        match self {
            Diagnostic::WellFormedness {
                location,
                action,
                resets,
                target,
            } => {
                let (act, resets) = match pta {
                    Some(p) => (
                        p.actions()[action.0].clone(),
                        ClockSetDisplay {
                            set: *resets,
                            names: p.clocks(),
                        }
                        .to_string(),
                    ),
                    None => (format!("#{}", action.0), format!("{:#x}", resets.bits())),
                };
                format!(
                    "well-formedness: ({}, {act}) may reset {resets} and enter {} outside its invariant",
                    loc(location),
                    loc(target)
                )
            }
            Diagnostic::InitialInvariant { location } => format!(
                "initial location {} does not admit the zero valuation",
                loc(location)
            ),
            Diagnostic::Determinism { first, second } => {
                format!("determinism: rules #{first} and #{second} overlap")
                    + &dtra
                        .map(|a| {
                            let r = &a.rules()[*first];
                            format!(
                                " (mode {}, symbol {})",
                                a.mode_name(r.source),
                                symbol_text(a, r.symbol)
                            )
                        })
                        .unwrap_or_default()
            }
            Diagnostic::Totality { mode: q, symbol } => format!(
                "totality: mode {} has no rule for some valuation on symbol {}",
                mode(q),
                dtra.map(|a| symbol_text(a, *symbol))
                    .unwrap_or_else(|| format!("#{}", symbol.0))
            ),
            Diagnostic::UnknownSymbol { location } => format!(
                "labels of location {} are not a symbol of the automaton",
                loc(location)
            ),
            Diagnostic::SharedClock { name } => {
                format!("clock `{name}` appears in both automata")
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Diagnostic::WellFormedness { .. } | Diagnostic::InitialInvariant { .. } => {
                "well-formedness"
            }
            Diagnostic::Determinism { .. } => "determinism",
            Diagnostic::Totality { .. } => "totality",
            Diagnostic::UnknownSymbol { .. } | Diagnostic::SharedClock { .. } => "pairing",
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(None, None))
    }
}

pub fn symbol_text(a: &Dtra, b: SymbolId) -> String {
    let items: Vec<&str> = a.symbol(b).iter().map(String::as_str).collect();
    format!("{{{}}}", items.join(", "))
}

fn zones(c: &Constraint, clocks: usize) -> ZoneSet {
    ZoneSet::from_constraint(c, clocks).expect("clocks were checked at construction")
}

pub fn check_well_formed(pta: &Pta) -> Vec<Diagnostic> {
    let n = pta.clock_count();
    let mut out = Vec::new();
    let initial = pta.initial();
    if !pta
        .invariant(initial)
        .eval(&Valuation::zero(n))
        .unwrap_or(false)
    {
        out.push(Diagnostic::InitialInvariant { location: initial });
    }
    for edge in pta.edges() {
        let source = zones(
            &pta.invariant(edge.source).clone().and(edge.guard.clone()),
            n,
        );
        if source.is_empty() {
            continue;
        }
        for b in edge.distribution.branches() {
            let outside = zones(&pta.invariant(b.target).clone().negate(), n);
            if outside.is_empty() {
                continue;
            }
            if !source.reset(b.resets).intersect(&outside).is_empty() {
                out.push(Diagnostic::WellFormedness {
                    location: edge.source,
                    action: edge.action,
                    resets: b.resets,
                    target: b.target,
                });
            }
        }
    }
    out
}

fn same_effect(a: &Rule, b: &Rule) -> bool {
    a.guard == b.guard && a.resets == b.resets && a.target == b.target
}

pub fn check_determinism(dtra: &Dtra) -> Vec<Diagnostic> {
    let n = dtra.clock_count();
    let mut out = Vec::new();
    for q in 0..dtra.modes().len() {
        for b in 0..dtra.alphabet().len() {
            let idx = dtra.rule_indices(ModeId(q), SymbolId(b));
            for (i, &r1) in idx.iter().enumerate() {
                for &r2 in &idx[i + 1..] {
                    let (a, c) = (&dtra.rules()[r1], &dtra.rules()[r2]);
                    if same_effect(a, c) {
                        continue;
                    }
                    let both = a.guard.clone().and(c.guard.clone());
                    if !zones(&both, n).is_empty() {
                        out.push(Diagnostic::Determinism {
                            first: r1,
                            second: r2,
                        });
                    }
                }
            }
        }
    }
    out
}

/// `!g1 && ... && !gk` over the rules of `(q, b)`; `true` when there are none.
pub fn uncovered(dtra: &Dtra, q: ModeId, b: SymbolId) -> Constraint {
    Constraint::conjunction(dtra.rules_by(q, b).map(|r| r.guard.clone().negate()))
}

pub fn check_totality(dtra: &Dtra) -> Vec<Diagnostic> {
    let n = dtra.clock_count();
    let mut out = Vec::new();
    for q in 0..dtra.modes().len() {
        for b in 0..dtra.alphabet().len() {
            let (q, b) = (ModeId(q), SymbolId(b));
            if !zones(&uncovered(dtra, q, b), n).is_empty() {
                out.push(Diagnostic::Totality { mode: q, symbol: b });
            }
        }
    }
    out
}

/// Compatibility of a PTA with an automaton reading its labels.
pub fn check_pairing(pta: &Pta, dtra: &Dtra) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for name in pta.clocks() {
        if dtra.clocks().contains(name) {
            out.push(Diagnostic::SharedClock { name: name.clone() });
        }
    }
    for (i, l) in pta.locations().iter().enumerate() {
        if dtra.symbol_id(&l.labels).is_none() {
            out.push(Diagnostic::UnknownSymbol {
                location: LocationId(i),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompletionError {
    #[error("automaton is not deterministic ({} overlapping rule pair(s))", .0.len())]
    NotDeterministic(Vec<Diagnostic>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Name of the sink mode added by [`complete_to_total`].
pub const SINK_MODE: &str = "FAIL";

/// Adds a fresh absorbing sink catching every uncovered `(mode, symbol,
/// valuation)`. Total automata are returned unchanged.
pub fn complete_to_total(dtra: &Dtra) -> Result<Dtra, CompletionError> {
    let violations = check_determinism(dtra);
    if !violations.is_empty() {
        return Err(CompletionError::NotDeterministic(violations));
    }
    let gaps = check_totality(dtra);
    if gaps.is_empty() {
        return Ok(dtra.clone());
    }
    let mut name = SINK_MODE.to_string();
    let mut k = 1;
    while dtra.mode_id(&name).is_some() {
        name = format!("{SINK_MODE}_{k}");
        k += 1;
    }
    let mut builder = dtra.to_builder();
    let sink = builder.mode(name);
    for gap in gaps {
        if let Diagnostic::Totality { mode, symbol } = gap {
            builder.rule(
                mode,
                symbol,
                uncovered(dtra, mode, symbol),
                ClockSet::empty(),
                sink,
            );
        }
    }
    for b in 0..dtra.alphabet().len() {
        builder.rule(sink, SymbolId(b), Constraint::True, ClockSet::empty(), sink);
    }
    Ok(builder.build()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::dtra::DtraBuilder;
    use crate::model::pta::{Branch, PtaBuilder};
    use crate::model::{ClockId, Probability};

    #[test]
    fn missing_reset_into_tighter_invariant() {
        let mut b = PtaBuilder::new();
        let x = b.clock("x");
        let l0 = b.location("l0", Constraint::upper(x, 5), Vec::<String>::new());
        let l1 = b.location("l1", Constraint::upper(x, 1), Vec::<String>::new());
        let a = b.action("a");
        b.edge(
            l0,
            a,
            Constraint::True,
            vec![Branch {
                prob: Probability::from_integer(1.into()),
                resets: ClockSet::empty(),
                target: l1,
            }],
        )
        .initial(l0);
        let pta = b.build().unwrap();
        let diags = check_well_formed(&pta);
        assert_eq!(
            diags,
            vec![Diagnostic::WellFormedness {
                location: l0,
                action: a,
                resets: ClockSet::empty(),
                target: l1
            }]
        );
    }

    #[test]
    fn empty_action_set_is_well_formed() {
        let mut b = PtaBuilder::new();
        let l = b.location("l", Constraint::True, Vec::<String>::new());
        b.initial(l);
        assert!(check_well_formed(&b.build().unwrap()).is_empty());
    }

    fn one_mode(guards: &[Constraint], targets: &[&str]) -> Dtra {
        let mut b = DtraBuilder::new();
        let q = b.mode("q");
        let y = b.clock("y");
        let s = b.symbol_of(["a"]);
        for (g, t) in guards.iter().zip(targets) {
            let target = match b.mode_names().iter().position(|m| m == t) {
                Some(i) => ModeId(i),
                None => b.mode(*t),
            };
            b.rule(q, s, g.clone(), ClockSet::empty(), target);
        }
        let _ = y;
        b.initial(q);
        b.build().unwrap()
    }

    #[test]
    fn overlapping_guards_violate_determinism() {
        let y = ClockId(0);
        let a = one_mode(
            &[Constraint::upper(y, 2), Constraint::upper(y, 3)],
            &["q", "r"],
        );
        assert_eq!(
            check_determinism(&a),
            vec![Diagnostic::Determinism {
                first: 0,
                second: 1
            }]
        );
    }

    #[test]
    fn complementary_guards_are_total() {
        let y = ClockId(0);
        let a = one_mode(
            &[Constraint::upper(y, 3), Constraint::upper(y, 3).negate()],
            &["q", "q"],
        );
        assert!(check_determinism(&a).is_empty());
        assert!(check_totality(&a).is_empty());
        assert_eq!(complete_to_total(&a).unwrap(), a);
    }

    #[test]
    fn completion_of_ruleless_mode() {
        let a = one_mode(&[], &[]);
        assert_eq!(check_totality(&a).len(), 1);
        let c = complete_to_total(&a).unwrap();
        assert_eq!(c.modes(), &["q".to_string(), "FAIL".to_string()]);
        assert_eq!(c.rules().len(), 2);
        assert!(check_totality(&c).is_empty());
        assert!(check_determinism(&c).is_empty());
    }
}
