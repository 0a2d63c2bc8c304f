//! TOML model documents, explicit-state MDP export and result records.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::decimal;
use crate::mdp::Mdp;
use crate::model::dtra::powerset;
use crate::model::expr;
use crate::model::{
    Branch, ClockId, ClockSet, Constraint, Dtra, DtraBuilder, ModeId, ModelError, Pta, PtaBuilder,
    RabinPair, Symbol,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IoError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("in {context}: {message}")]
    Constraint { context: String, message: String },
    #[error("unknown {kind} `{name}` in {context}")]
    Unbound {
        kind: &'static str,
        name: String,
        context: String,
    },
    #[error("bad probability `{text}` in {context}")]
    Probability { text: String, context: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDocument {
    pub format: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_mode: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pta: Option<RawPta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dtra: Option<RawDtra>,
}

fn truth() -> String {
    "true".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPta {
    #[serde(default)]
    pub clocks: Vec<String>,
    #[serde(default)]
    pub atomic_props: Vec<String>,
    #[serde(default)]
    pub actions: Vec<String>,
    pub initial: String,
    pub locations: Vec<RawLocation>,
    #[serde(default)]
    pub edges: Vec<RawEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawLocation {
    pub name: String,
    #[serde(default = "truth")]
    pub invariant: String,
    #[serde(default)]
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEdge {
    pub from: String,
    pub action: String,
    #[serde(default = "truth")]
    pub guard: String,
    pub branches: Vec<RawBranch>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBranch {
    pub prob: String,
    #[serde(default)]
    pub resets: Vec<String>,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDtra {
    #[serde(default)]
    pub clocks: Vec<String>,
    pub modes: Vec<String>,
    /// Defaults to all subsets of the PTA propositions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<Vec<Vec<String>>>,
    pub initial: String,
    #[serde(default)]
    pub rules: Vec<RawRule>,
    #[serde(default)]
    pub rabin: Vec<RawPair>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRule {
    pub from: String,
    pub symbol: Vec<String>,
    #[serde(default = "truth")]
    pub guard: String,
    #[serde(default)]
    pub resets: Vec<String>,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPair {
    #[serde(default)]
    pub avoid: Vec<String>,
    #[serde(default)]
    pub visit: Vec<String>,
}

/// A parsed model file: its canonical raw form and the resolved models.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub raw: RawDocument,
    pub pta: Option<Pta>,
    pub dtra: Option<Dtra>,
    pub initial_mode: Option<ModeId>,
}

impl ModelDocument {
    /// The initial mode named in the document, or the automaton's own.
    pub fn start_mode(&self) -> Option<ModeId> {
        self.initial_mode
            .or(self.dtra.as_ref().map(|d| d.initial()))
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    (line, column)
}

/// Parses a model document and resolves every reference.
pub fn parse_model(text: &str) -> Result<ModelDocument, IoError> {
    let raw: RawDocument = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
        IoError::Syntax {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    resolve(raw)
}

/// Resolves a raw document into models and canonicalises its text fields.
pub fn resolve(mut raw: RawDocument) -> Result<ModelDocument, IoError> {
    if raw.format != FORMAT_VERSION {
        return Err(IoError::Version(raw.format));
    }
    let constants = raw.constants.clone();
    let pta = match raw.pta.as_mut() {
        Some(p) => Some(resolve_pta(p, &constants)?),
        None => None,
    };
    let props: Vec<String> = raw
        .pta
        .as_ref()
        .map(|p| p.atomic_props.clone())
        .unwrap_or_default();
    let dtra = match raw.dtra.as_mut() {
        Some(d) => Some(resolve_dtra(d, &constants, &props)?),
        None => None,
    };
    let initial_mode = match (&raw.initial_mode, &dtra) {
        (None, _) => None,
        (Some(name), Some(d)) => Some(d.mode_id(name).ok_or_else(|| IoError::Unbound {
            kind: "mode",
            name: name.clone(),
            context: "initial_mode".into(),
        })?),
        (Some(name), None) => {
            return Err(IoError::Unbound {
                kind: "mode",
                name: name.clone(),
                context: "initial_mode (no automaton)".into(),
            })
        }
    };
    Ok(ModelDocument {
        raw,
        pta,
        dtra,
        initial_mode,
    })
}

fn constraint(
    text: &mut String,
    clocks: &[String],
    constants: &BTreeMap<String, u32>,
    context: &str,
) -> Result<Constraint, IoError> {
    let is_clock = |s: &str| clocks.iter().any(|c| c == s);
    let e = expr::parse(text, &is_clock).map_err(|e| IoError::Constraint {
        context: context.to_string(),
        message: e.to_string(),
    })?;
    let c = e
        .resolve(
            &|s: &str| clocks.iter().position(|c| c == s).map(ClockId),
            &|s: &str| constants.get(s).copied(),
        )
        .map_err(|message| IoError::Constraint {
            context: context.to_string(),
            message,
        })?;
    *text = e.to_string();
    Ok(c)
}

fn clock_set(names: &[String], clocks: &[String], context: &str) -> Result<ClockSet, IoError> {
    names
        .iter()
        .map(|n| {
            clocks
                .iter()
                .position(|c| c == n)
                .map(ClockId)
                .ok_or_else(|| IoError::Unbound {
                    kind: "clock",
                    name: n.clone(),
                    context: context.to_string(),
                })
        })
        .collect()
}

/// Exact probability from `0.85`, `17/20` or `1`.
pub fn parse_probability(text: &str) -> Option<BigRational> {
    match text.split_once('/') {
        Some((n, d)) => {
            let n: num::BigInt = n.trim().parse().ok()?;
            let d: num::BigInt = d.trim().parse().ok()?;
            if d == num::BigInt::from(0) {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => decimal(text),
    }
}

fn resolve_pta(p: &mut RawPta, constants: &BTreeMap<String, u32>) -> Result<Pta, IoError> {
    let mut b = PtaBuilder::new();
    for c in &p.clocks {
        b.clock(c.clone());
    }
    let mut loc_ids = BTreeMap::new();
    for l in p.locations.iter_mut() {
        let context = format!("invariant of `{}`", l.name);
        let inv = constraint(&mut l.invariant, &p.clocks, constants, &context)?;
        let id = b.location(l.name.clone(), inv, l.labels.iter().cloned());
        loc_ids.insert(l.name.clone(), id);
    }
    let location = |name: &str, context: &str| {
        loc_ids.get(name).copied().ok_or_else(|| IoError::Unbound {
            kind: "location",
            name: name.to_string(),
            context: context.to_string(),
        })
    };
    let mut actions = p.actions.clone();
    for e in &p.edges {
        if !actions.contains(&e.action) {
            actions.push(e.action.clone());
        }
    }
    let act_ids: BTreeMap<String, _> = actions
        .iter()
        .map(|a| (a.clone(), b.action(a.clone())))
        .collect();
    for e in p.edges.iter_mut() {
        let context = format!("edge `{}` from `{}`", e.action, e.from);
        let from = location(&e.from, &context)?;
        let guard = constraint(&mut e.guard, &p.clocks, constants, &context)?;
        let mut branches = Vec::new();
        for br in e.branches.iter_mut() {
            let prob = parse_probability(&br.prob).ok_or_else(|| IoError::Probability {
                text: br.prob.clone(),
                context: context.clone(),
            })?;
            br.prob = prob.to_string();
            branches.push(Branch {
                prob,
                resets: clock_set(&br.resets, &p.clocks, &context)?,
                target: location(&br.to, &context)?,
            });
        }
        b.edge(from, act_ids[&e.action], guard, branches);
    }
    p.actions = actions;
    b.initial(location(&p.initial, "initial location")?);
    b.atomic_props(p.atomic_props.iter().cloned());
    Ok(b.build()?)
}

fn resolve_dtra(
    d: &mut RawDtra,
    constants: &BTreeMap<String, u32>,
    props: &[String],
) -> Result<Dtra, IoError> {
    let mut b = DtraBuilder::new();
    let alphabet: Vec<Symbol> = match &d.alphabet {
        Some(list) => list.iter().map(|s| s.iter().cloned().collect()).collect(),
        None => powerset(props),
    };
    for s in &alphabet {
        b.symbol(s.clone());
    }
    d.alphabet = Some(
        alphabet
            .iter()
            .map(|s| s.iter().cloned().collect())
            .collect(),
    );
    let modes: BTreeMap<String, ModeId> = d
        .modes
        .iter()
        .map(|m| (m.clone(), b.mode(m.clone())))
        .collect();
    let mode = |name: &str, context: &str| {
        modes.get(name).copied().ok_or_else(|| IoError::Unbound {
            kind: "mode",
            name: name.to_string(),
            context: context.to_string(),
        })
    };
    for c in &d.clocks {
        b.clock(c.clone());
    }
    for r in d.rules.iter_mut() {
        let symbol: Symbol = r.symbol.iter().cloned().collect();
        let context = format!("rule from `{}` on {:?}", r.from, symbol);
        let sym = alphabet
            .iter()
            .position(|s| *s == symbol)
            .map(crate::model::SymbolId)
            .ok_or_else(|| IoError::Unbound {
                kind: "symbol",
                name: format!("{symbol:?}"),
                context: context.clone(),
            })?;
        r.symbol = symbol.iter().cloned().collect();
        let guard = constraint(&mut r.guard, &d.clocks, constants, &context)?;
        let resets = clock_set(&r.resets, &d.clocks, &context)?;
        b.rule(
            mode(&r.from, &context)?,
            sym,
            guard,
            resets,
            mode(&r.to, &context)?,
        );
    }
    let mut pairs = Vec::new();
    for p in &d.rabin {
        let set = |names: &[String]| -> Result<BTreeSet<ModeId>, IoError> {
            names.iter().map(|n| mode(n, "Rabin pair")).collect()
        };
        pairs.push(RabinPair {
            avoid: set(&p.avoid)?,
            visit: set(&p.visit)?,
        });
    }
    b.set_rabin(pairs);
    b.initial(mode(&d.initial, "initial mode")?);
    Ok(b.build()?)
}

/// Canonical text of a document.
pub fn serialize_model(doc: &ModelDocument) -> String {
    toml::to_string(&doc.raw).expect("raw documents are serializable")
}

fn names(set: ClockSet, clocks: &[String]) -> Vec<String> {
    set.iter().map(|c| clocks[c.0].clone()).collect()
}

pub fn raw_pta(pta: &Pta) -> RawPta {
    let clocks = pta.clocks();
    RawPta {
        clocks: clocks.to_vec(),
        atomic_props: pta.atomic_props().iter().cloned().collect(),
        actions: pta.actions().to_vec(),
        initial: pta.location(pta.initial()).name.clone(),
        locations: pta
            .locations()
            .iter()
            .map(|l| RawLocation {
                name: l.name.clone(),
                invariant: l.invariant.to_expr(clocks).to_string(),
                labels: l.labels.iter().cloned().collect(),
            })
            .collect(),
        edges: pta
            .edges()
            .iter()
            .map(|e| RawEdge {
                from: pta.location(e.source).name.clone(),
                action: pta.actions()[e.action.0].clone(),
                guard: e.guard.to_expr(clocks).to_string(),
                branches: e
                    .distribution
                    .branches()
                    .iter()
                    .map(|b| RawBranch {
                        prob: b.prob.to_string(),
                        resets: names(b.resets, clocks),
                        to: pta.location(b.target).name.clone(),
                    })
                    .collect(),
            })
            .collect(),
    }
}

pub fn raw_dtra(dtra: &Dtra) -> RawDtra {
    let clocks = dtra.clocks();
    let mode_names =
        |set: &BTreeSet<ModeId>| set.iter().map(|q| dtra.mode_name(*q).to_string()).collect();
    RawDtra {
        clocks: clocks.to_vec(),
        modes: dtra.modes().to_vec(),
        alphabet: Some(
            dtra.alphabet()
                .iter()
                .map(|s| s.iter().cloned().collect())
                .collect(),
        ),
        initial: dtra.mode_name(dtra.initial()).to_string(),
        rules: dtra
            .rules()
            .iter()
            .map(|r| RawRule {
                from: dtra.mode_name(r.source).to_string(),
                symbol: dtra.symbol(r.symbol).iter().cloned().collect(),
                guard: r.guard.to_expr(clocks).to_string(),
                resets: names(r.resets, clocks),
                to: dtra.mode_name(r.target).to_string(),
            })
            .collect(),
        rabin: dtra
            .rabin()
            .iter()
            .map(|p| RawPair {
                avoid: mode_names(&p.avoid),
                visit: mode_names(&p.visit),
            })
            .collect(),
    }
}

/// A document holding concrete models, without named constants.
pub fn document(pta: Option<&Pta>, dtra: Option<&Dtra>, mode: Option<ModeId>) -> ModelDocument {
    let raw = RawDocument {
        format: FORMAT_VERSION,
        initial_mode: match (mode, dtra) {
            (Some(q), Some(d)) => Some(d.mode_name(q).to_string()),
            _ => None,
        },
        constants: BTreeMap::new(),
        pta: pta.map(raw_pta),
        dtra: dtra.map(raw_dtra),
    };
    ModelDocument {
        raw,
        pta: pta.cloned(),
        dtra: dtra.cloned(),
        initial_mode: mode.filter(|_| dtra.is_some()),
    }
}

/// Explicit-state listing of an MDP: a header with the label and action
/// maps, the labels of every state, then one line per
/// `state move action target probability`, ordered by state, move and
/// target.
pub fn export_mdp(mdp: &Mdp) -> String {
    let mut out = String::new();
    writeln!(out, "mdp {FORMAT_VERSION}").unwrap();
    writeln!(out, "states {}", mdp.num_states()).unwrap();
    writeln!(out, "moves {}", mdp.num_moves()).unwrap();
    writeln!(out, "initial {}", mdp.initial()).unwrap();
    writeln!(out, "labels {}", mdp.label_names().len()).unwrap();
    for (i, l) in mdp.label_names().iter().enumerate() {
        writeln!(out, "label {i} {l}").unwrap();
    }
    writeln!(out, "actions {}", mdp.action_names().len()).unwrap();
    for (i, a) in mdp.action_names().iter().enumerate() {
        writeln!(out, "action {i} {a}").unwrap();
    }
    for s in 0..mdp.num_states() {
        let labels: Vec<String> = mdp.labels(s).iter().map(|l| l.to_string()).collect();
        writeln!(out, "state {s} {}", labels.join(" ")).unwrap();
    }
    for s in 0..mdp.num_states() {
        for m in mdp.moves(s) {
            let mut branches: Vec<usize> = mdp.branches(m).collect();
            branches.sort_by_key(|&b| mdp.target(b));
            for b in branches {
                writeln!(
                    out,
                    "{s} {m} {} {} {}",
                    mdp.move_action(m),
                    mdp.target(b),
                    mdp.prob(b)
                )
                .unwrap();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
format = 1

[constants]
C = 3

[pta]
clocks = ["x"]
atomic_props = ["a"]
initial = "l0"

[[pta.locations]]
name = "l0"
invariant = "x <= C"
labels = ["a"]

[[pta.locations]]
name = "l1"

[[pta.edges]]
from = "l0"
action = "go"
guard = "x >= 1"
branches = [
  { prob = "0.25", resets = ["x"], to = "l0" },
  { prob = "3/4", to = "l1" },
]

[[pta.edges]]
from = "l1"
action = "stay"
branches = [{ prob = "1", to = "l1" }]
"#;

    #[test]
    fn parse_and_round_trip() {
        let doc = parse_model(SMALL).unwrap();
        let pta = doc.pta.as_ref().unwrap();
        assert_eq!(pta.locations().len(), 2);
        assert_eq!(
            pta.invariant(pta.initial()),
            &Constraint::upper(ClockId(0), 3)
        );
        let text = serialize_model(&doc);
        assert!(text.contains("x <= C"));
        let again = parse_model(&text).unwrap();
        assert_eq!(again, doc);
        assert_eq!(serialize_model(&again), text);
    }

    #[test]
    fn probability_sum_is_checked() {
        let bad = SMALL.replace("3/4", "0.4").replace("0.25", "0.5");
        let err = parse_model(&bad).unwrap_err();
        assert!(err.to_string().contains("go"), "{err}");
        assert!(err.to_string().contains("sum"), "{err}");
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_model("format = 1\n[pta\n").unwrap_err();
        assert!(matches!(err, IoError::Syntax { line: 2, .. }), "{err}");
    }

    #[test]
    fn unbound_constant() {
        let bad = SMALL.replace("x <= C", "x <= D");
        assert!(matches!(parse_model(&bad), Err(IoError::Constraint { .. })));
    }

    #[test]
    fn probabilities() {
        assert_eq!(
            parse_probability("1/3"),
            Some(BigRational::new(1.into(), 3.into()))
        );
        assert_eq!(
            parse_probability("0.1"),
            Some(BigRational::new(1.into(), 10.into()))
        );
        assert_eq!(parse_probability("1/0"), None);
    }
}
