use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num::{BigRational, One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{branches, BenchError, BenchmarkInstance};
use crate::model::dtra::powerset;
use crate::model::{ClockSet, Constraint, DtraBuilder, PtaBuilder};

pub type Cell = (usize, usize);

/// Parameters of the robot-navigation family. Cells are `(column, row)`;
/// the robot starts at `(0, 0)` and heads for the upper right corner.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotParams {
    pub width: usize,
    pub height: usize,
    pub obstacles: BTreeSet<Cell>,
    pub leave_prob: BigRational,
    /// Time window `[lo, hi]` to leave a tile.
    pub dwell: (u32, u32),
    /// Bound on the time spent on one tile.
    pub dwell_bound: u32,
    /// Bound on the time to reach the destination.
    pub total_bound: u32,
    pub seed: u64,
}

impl RobotParams {
    /// The 3-by-2 grid with an obstacle at `(1, 1)`, leave probability 0.9,
    /// window [2,3], dwell bound 5 and total bound 30.
    pub fn grid3x2() -> Self {
        RobotParams {
            width: 3,
            height: 2,
            obstacles: BTreeSet::from([(1, 1)]),
            leave_prob: BigRational::new(9.into(), 10.into()),
            dwell: (2, 3),
            dwell_bound: 5,
            total_bound: 30,
            seed: 0,
        }
    }

    /// An `n`-by-`n` grid with `n - 2` random obstacles, dwell bound 9 and
    /// total bound `15 n`.
    pub fn scaled(n: usize, seed: u64) -> Result<Self, BenchError> {
        if n < 2 {
            return Err(BenchError::Params("grid side must be at least 2".into()));
        }
        let mut p = RobotParams {
            width: n,
            height: n,
            obstacles: BTreeSet::new(),
            leave_prob: BigRational::new(9.into(), 10.into()),
            dwell: (2, 3),
            dwell_bound: 9,
            total_bound: 15 * n as u32,
            seed,
        };
        let count = n.saturating_sub(2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut candidates: Vec<Cell> = (0..n)
            .flat_map(|r| (0..n).map(move |c| (c, r)))
            .filter(|&c| c != p.start() && c != p.goal())
            .collect();
        for _ in 0..1000 {
            candidates.shuffle(&mut rng);
            p.obstacles = candidates[..count].iter().copied().collect();
            if p.connected() {
                return Ok(p);
            }
        }
        Err(BenchError::Disconnected)
    }

    pub fn start(&self) -> Cell {
        (0, 0)
    }

    pub fn goal(&self) -> Cell {
        (self.width - 1, self.height - 1)
    }

    pub fn is_free(&self, c: Cell) -> bool {
        c.0 < self.width && c.1 < self.height && !self.obstacles.contains(&c)
    }

    /// Free neighbours in the order left, right, down, up.
    pub fn neighbours(&self, (c, r): Cell) -> Vec<Cell> {
        let mut out = Vec::with_capacity(4);
        if c > 0 {
            out.push((c - 1, r));
        }
        out.push((c + 1, r));
        if r > 0 {
            out.push((c, r - 1));
        }
        out.push((c, r + 1));
        out.retain(|&n| self.is_free(n));
        out
    }

    pub fn free_cells(&self) -> Vec<Cell> {
        (0..self.height)
            .flat_map(|r| (0..self.width).map(move |c| (c, r)))
            .filter(|&c| self.is_free(c))
            .collect()
    }

    /// Whether all free cells are mutually reachable.
    pub fn connected(&self) -> bool {
        let free = self.free_cells();
        if !self.is_free(self.start()) {
            return false;
        }
        let mut seen = BTreeSet::from([self.start()]);
        let mut queue = VecDeque::from([self.start()]);
        while let Some(c) = queue.pop_front() {
            for n in self.neighbours(c) {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen.len() == free.len()
    }
}

fn cell_label(p: &RobotParams, c: Cell) -> Option<&'static str> {
    if c == p.goal() {
        None
    } else if (c.0 + c.1).is_multiple_of(2) {
        Some("alpha")
    } else {
        Some("beta")
    }
}

/// A robot wandering uniformly over free neighbour tiles until it reaches
/// the destination; the automaton bounds the dwell time per tile and the
/// total time.
pub fn gen_robot(p: &RobotParams) -> Result<BenchmarkInstance, BenchError> {
    if p.width == 0 || p.height == 0 || p.width * p.height < 2 {
        return Err(BenchError::Params("grid needs at least two tiles".into()));
    }
    if !p.is_free(p.start()) || !p.is_free(p.goal()) {
        return Err(BenchError::Params(
            "start and destination must not be obstacles".into(),
        ));
    }
    if p.leave_prob <= BigRational::zero() || p.leave_prob > BigRational::one() {
        return Err(BenchError::Params(
            "leave probability must lie in (0, 1]".into(),
        ));
    }
    if p.dwell.0 > p.dwell.1 {
        return Err(BenchError::Params("dwell window is empty".into()));
    }
    if !p.connected() {
        return Err(BenchError::Disconnected);
    }

    let mut b = PtaBuilder::new();
    let x = b.clock("x");
    let cells = p.free_cells();
    let mut ids = BTreeMap::new();
    for &c in &cells {
        let id = if c == p.goal() {
            b.location(
                format!("l{}_{}", c.0, c.1),
                Constraint::True,
                Vec::<String>::new(),
            )
        } else {
            b.location(
                format!("l{}_{}", c.0, c.1),
                Constraint::upper(x, p.dwell.1),
                cell_label(p, c),
            )
        };
        ids.insert(c, id);
    }
    let mv = b.action("move");
    let stay = b.action("stay");
    let window = Constraint::lower(p.dwell.0, x).and(Constraint::upper(x, p.dwell.1));
    for &c in &cells {
        let here = ids[&c];
        if c == p.goal() {
            b.edge(
                here,
                stay,
                Constraint::True,
                branches(ClockSet::singleton(x), &[(BigRational::one(), here)]),
            );
            continue;
        }
        let near = p.neighbours(c);
        let share = &p.leave_prob / BigRational::from_integer(near.len().into());
        let mut items: Vec<(BigRational, _)> =
            near.iter().map(|n| (share.clone(), ids[n])).collect();
        items.push((BigRational::one() - &p.leave_prob, here));
        b.edge(
            here,
            mv,
            window.clone(),
            branches(ClockSet::singleton(x), &items),
        );
    }
    b.initial(ids[&p.start()]);
    b.atomic_props(["alpha", "beta"]);
    let pta = b.build()?;

    let mut d = DtraBuilder::new();
    for s in powerset(&["alpha", "beta"]) {
        d.symbol(s);
    }
    let q0 = d.mode("q0");
    let qa = d.mode("q1");
    let qb = d.mode("q2");
    let qf = d.mode("q3");
    let y = d.clock("y");
    let z = d.clock("z");
    let sa = d.symbol_of(["alpha"]);
    let sb = d.symbol_of(["beta"]);
    let se = d.symbol_of(Vec::<String>::new());
    let none = ClockSet::empty();
    let ry = ClockSet::singleton(y);
    let dwell = Constraint::upper(y, p.dwell_bound);
    let arrive = dwell.clone().and(Constraint::upper(z, p.total_bound));
    d.rule(q0, sa, Constraint::True, ry, qa)
        .rule(q0, sb, Constraint::True, ry, qb)
        .rule(qa, sa, Constraint::True, none, qa)
        .rule(qa, sb, dwell.clone(), ry, qb)
        .rule(qa, se, arrive.clone(), none, qf)
        .rule(qb, sb, Constraint::True, none, qb)
        .rule(qb, sa, dwell, ry, qa)
        .rule(qb, se, arrive, none, qf)
        .rule(qf, se, Constraint::True, none, qf)
        .initial(q0)
        .rabin_pair([], [qf]);
    let dtra = d.build()?;

    let mut params = BTreeMap::new();
    params.insert("grid".into(), format!("{}x{}", p.width, p.height));
    params.insert(
        "obstacles".into(),
        p.obstacles
            .iter()
            .map(|(c, r)| format!("({c},{r})"))
            .collect::<Vec<_>>()
            .join(","),
    );
    params.insert("leave_prob".into(), p.leave_prob.to_string());
    params.insert("dwell".into(), format!("[{},{}]", p.dwell.0, p.dwell.1));
    params.insert("dwell_bound".into(), p.dwell_bound.to_string());
    params.insert("total_bound".into(), p.total_bound.to_string());
    Ok(BenchmarkInstance {
        family: "robot".into(),
        n: p.width.max(p.height),
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
    fn grid3x2_shape() {
        let inst = gen_robot(&RobotParams::grid3x2()).unwrap();
        assert_eq!(inst.pta.locations().len(), 5);
        assert_eq!(inst.dtra.modes().len(), 4);
    }

    #[test]
    fn checkerboard_neighbours_differ() {
        let p = RobotParams::scaled(4, 3).unwrap();
        for c in p.free_cells() {
            for n in p.neighbours(c) {
                if c != p.goal() && n != p.goal() {
                    assert_ne!(cell_label(&p, c), cell_label(&p, n));
                }
            }
        }
        let inst = gen_robot(&p).unwrap();
        assert_eq!(inst.pta.locations().len(), 16 - p.obstacles.len());
    }

    #[test]
    fn disconnected_grid_is_rejected() {
        let mut p = RobotParams::grid3x2();
        p.obstacles = BTreeSet::from([(1, 0), (1, 1)]);
        assert_eq!(gen_robot(&p).unwrap_err(), BenchError::Disconnected);
    }
}
