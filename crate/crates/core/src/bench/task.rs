use std::collections::BTreeMap;

use num::{BigRational, One, Zero};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{branches, BenchError, BenchmarkInstance};
use crate::model::dtra::powerset;
use crate::model::{ClockSet, Constraint, DtraBuilder, PtaBuilder};

/// Parameters of the sequential task-completion family.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskParams {
    /// Success probability of each task.
    pub probs: Vec<BigRational>,
    /// Processing window `[lo, hi]` of each task.
    pub windows: Vec<(u32, u32)>,
    /// Bound on the completion time of each task, including retries.
    pub task_bounds: Vec<u32>,
    /// Bound on the completion time of all tasks.
    pub total_bound: u32,
    pub seed: u64,
}

impl TaskParams {
    /// The two-task instance: success 0.9 and 0.8, windows [1,2] and [2,3],
    /// task bounds 3 and 4, total bound 6.
    pub fn two_task() -> Self {
        TaskParams {
            probs: vec![
                BigRational::new(9.into(), 10.into()),
                BigRational::new(4.into(), 5.into()),
            ],
            windows: vec![(1, 2), (2, 3)],
            task_bounds: vec![3, 4],
            total_bound: 6,
            seed: 0,
        }
    }

    /// `n` tasks with windows [2,3], success probabilities drawn from
    /// 0.81, 0.82, ..., 0.95, task bounds 9 and total bound `6 n`.
    pub fn scaled(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let choices: Vec<u32> = (81..=95).collect();
        TaskParams {
            probs: (0..n)
                .map(|_| {
                    let p = *choices.choose(&mut rng).expect("non-empty");
                    BigRational::new(p.into(), 100.into())
                })
                .collect(),
            windows: vec![(2, 3); n],
            task_bounds: vec![9; n],
            total_bound: 6 * n as u32,
            seed,
        }
    }

    pub fn tasks(&self) -> usize {
        self.probs.len()
    }
}

fn task_label(i: usize) -> &'static str {
    if i.is_multiple_of(2) {
        "alpha"
    } else {
        "beta"
    }
}

/// `N` tasks processed in order, each retried until it succeeds, followed
/// by an absorbing location labelled `{}`; the automaton bounds the time of
/// each task and of all tasks.
pub fn gen_task_completion(p: &TaskParams) -> Result<BenchmarkInstance, BenchError> {
    let n = p.tasks();
    if n == 0 {
        return Err(BenchError::Params("at least one task is needed".into()));
    }
    if p.windows.len() != n || p.task_bounds.len() != n {
        return Err(BenchError::Params(format!(
            "{n} tasks need {n} windows and {n} task bounds"
        )));
    }
    for (i, prob) in p.probs.iter().enumerate() {
        if *prob <= BigRational::zero() || *prob > BigRational::one() {
            return Err(BenchError::Params(format!(
                "success probability of task {i} must lie in (0, 1]"
            )));
        }
    }
    for (i, &(lo, hi)) in p.windows.iter().enumerate() {
        if lo > hi {
            return Err(BenchError::Params(format!(
                "window of task {i} is empty: [{lo}, {hi}]"
            )));
        }
    }

    let mut b = PtaBuilder::new();
    let x = b.clock("x");
    let tasks: Vec<_> = (0..n)
        .map(|i| {
            b.location(
                format!("l{i}"),
                Constraint::upper(x, p.windows[i].1),
                [task_label(i)],
            )
        })
        .collect();
    let done = b.location(format!("l{n}"), Constraint::True, Vec::<String>::new());
    let process = b.action("process");
    let idle = b.action("idle");
    for i in 0..n {
        let next = if i + 1 < n { tasks[i + 1] } else { done };
        let (lo, hi) = p.windows[i];
        let fail = BigRational::one() - &p.probs[i];
        b.edge(
            tasks[i],
            process,
            Constraint::lower(lo, x).and(Constraint::upper(x, hi)),
            branches(
                ClockSet::singleton(x),
                &[(p.probs[i].clone(), next), (fail, tasks[i])],
            ),
        );
    }
    b.edge(
        done,
        idle,
        Constraint::True,
        branches(ClockSet::singleton(x), &[(BigRational::one(), done)]),
    );
    b.initial(tasks[0]);
    b.atomic_props(["alpha", "beta"]);
    let pta = b.build()?;

    let mut d = DtraBuilder::new();
    for s in powerset(&["alpha", "beta"]) {
        d.symbol(s);
    }
    let modes: Vec<_> = (0..n + 2).map(|i| d.mode(format!("q{i}"))).collect();
    let y = d.clock("y");
    let z = d.clock("z");
    let sym = |d: &mut DtraBuilder, i: usize| d.symbol_of([task_label(i)]);
    let empty = d.symbol_of(Vec::<String>::new());
    let none = ClockSet::empty();
    let s0 = sym(&mut d, 0);
    d.rule(modes[0], s0, Constraint::True, none, modes[1]);
    for t in 0..n {
        let here = modes[t + 1];
        let st = sym(&mut d, t);
        d.rule(here, st, Constraint::True, none, here);
        let within = Constraint::upper(y, p.task_bounds[t]);
        if t + 1 < n {
            let sn = sym(&mut d, t + 1);
            d.rule(here, sn, within, ClockSet::singleton(y), modes[t + 2]);
        } else {
            let all = within.and(Constraint::upper(z, p.total_bound));
            d.rule(here, empty, all, none, modes[n + 1]);
        }
    }
    d.rule(modes[n + 1], empty, Constraint::True, none, modes[n + 1]);
    d.initial(modes[0]).rabin_pair([], [modes[n + 1]]);
    let dtra = d.build()?;

    let mut params = BTreeMap::new();
    params.insert(
        "probs".into(),
        p.probs
            .iter()
            .map(|q| q.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    params.insert(
        "windows".into(),
        p.windows
            .iter()
            .map(|(l, h)| format!("[{l},{h}]"))
            .collect::<Vec<_>>()
            .join(","),
    );
    params.insert(
        "task_bounds".into(),
        p.task_bounds
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    params.insert("total_bound".into(), p.total_bound.to_string());
    Ok(BenchmarkInstance {
        family: "task".into(),
        n,
        seed: p.seed,
        params,
        mode: dtra.initial(),
        pta,
        dtra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_task_shape() {
        let inst = gen_task_completion(&TaskParams::two_task()).unwrap();
        assert_eq!(inst.pta.locations().len(), 3);
        assert_eq!(inst.dtra.modes().len(), 4);
    }

    #[test]
    fn scaled_bounds() {
        let p = TaskParams::scaled(4, 7);
        assert_eq!(p.total_bound, 24);
        assert!(p.task_bounds.iter().all(|&b| b == 9));
        let inst = gen_task_completion(&p).unwrap();
        assert_eq!(inst.dtra.modes().len(), 6);
        assert_eq!(inst.pta.locations().len(), 5);
    }

    #[test]
    fn malformed_window_is_rejected() {
        let mut p = TaskParams::two_task();
        p.windows[1] = (3, 2);
        assert!(matches!(
            gen_task_completion(&p),
            Err(BenchError::Params(_))
        ));
    }
}
