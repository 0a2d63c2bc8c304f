use std::collections::BTreeMap;

use num::BigRational;

use super::{branches, BenchError, BenchmarkInstance};
use crate::model::dtra::powerset;
use crate::model::{ClockSet, Constraint, Dtra, DtraBuilder, Pta, PtaBuilder};

/// Failing and waiting bounds of the two-job automaton.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunningConstants {
    pub c_alpha: u32,
    pub c_beta: u32,
    pub w_alpha: u32,
    pub w_beta: u32,
}

impl Default for RunningConstants {
    fn default() -> Self {
        RunningConstants {
            c_alpha: 3,
            c_beta: 4,
            w_alpha: 6,
            w_beta: 5,
        }
    }
}

impl RunningConstants {
    pub fn named(&self) -> BTreeMap<String, u32> {
        BTreeMap::from([
            ("C_alpha".to_string(), self.c_alpha),
            ("C_beta".to_string(), self.c_beta),
            ("W_alpha".to_string(), self.w_alpha),
            ("W_beta".to_string(), self.w_beta),
        ])
    }
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// The faulty two-job machine: job α within 10 time units failing with
/// probability 1/10, job β within 15 failing with probability 1/5.
pub fn fig1_pta() -> Pta {
    let mut b = PtaBuilder::new();
    let x = b.clock("x");
    let wa = b.location("WORK_alpha", Constraint::upper(x, 10), ["alpha"]);
    let wb = b.location("WORK_beta", Constraint::upper(x, 15), ["beta"]);
    let ta = b.action("tau_alpha");
    let tb = b.action("tau_beta");
    let reset = ClockSet::singleton(x);
    b.edge(
        wa,
        ta,
        Constraint::True,
        branches(reset, &[(ratio(1, 10), wa), (ratio(9, 10), wb)]),
    );
    b.edge(
        wb,
        tb,
        Constraint::True,
        branches(reset, &[(ratio(1, 5), wb), (ratio(4, 5), wa)]),
    );
    b.initial(wa);
    b.build().expect("fixed model is valid")
}

/// The two-job specification over `{alpha, beta}`. It is deliberately not
/// total: symbols `{}` and `{alpha, beta}` have no rules.
pub fn running_dtra(k: RunningConstants) -> Dtra {
    let mut b = DtraBuilder::new();
    for s in powerset(&["alpha", "beta"]) {
        b.symbol(s);
    }
    let init = b.mode("INIT");
    let qa = b.mode("q_alpha");
    let qb = b.mode("q_beta");
    let fail = b.mode("FAIL");
    let y = b.clock("y");
    let a = b.symbol_of(["alpha"]);
    let be = b.symbol_of(["beta"]);
    let none = ClockSet::empty();
    let ry = ClockSet::singleton(y);
    b.rule(init, a, Constraint::True, ry, qa)
        .rule(init, be, Constraint::True, ry, qb)
        .rule(qa, a, Constraint::upper(y, k.c_alpha), none, qa)
        .rule(qa, be, Constraint::upper(y, k.w_beta), ry, qb)
        .rule(qa, a, Constraint::strict_lower(k.c_alpha, y), none, fail)
        .rule(qa, be, Constraint::strict_lower(k.w_beta, y), none, fail)
        .rule(qb, be, Constraint::upper(y, k.c_beta), none, qb)
        .rule(qb, a, Constraint::upper(y, k.w_alpha), ry, qa)
        .rule(qb, be, Constraint::strict_lower(k.c_beta, y), none, fail)
        .rule(qb, a, Constraint::strict_lower(k.w_alpha, y), none, fail);
    for s in 0..b.alphabet().len() {
        b.rule(
            fail,
            crate::model::SymbolId(s),
            Constraint::True,
            none,
            fail,
        );
    }
    b.initial(init).rabin_pair([fail], [qa, qb]);
    b.build().expect("fixed automaton is valid")
}

pub fn running_example(k: RunningConstants) -> Result<BenchmarkInstance, BenchError> {
    let dtra = running_dtra(k);
    let mode = dtra.initial();
    Ok(BenchmarkInstance {
        family: "running".into(),
        n: 1,
        seed: 0,
        params: k
            .named()
            .into_iter()
            .map(|(n, v)| (n, v.to_string()))
            .collect(),
        pta: fig1_pta(),
        dtra,
        mode,
    })
}
