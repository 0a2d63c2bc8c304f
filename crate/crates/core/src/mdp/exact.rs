use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use super::reach::{qualitative, Direction};
use super::Mdp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("exact solving refused: {states} states exceed the cap of {cap}")]
    TooLarge { states: usize, cap: usize },
    #[error("singular linear system under policy iteration")]
    Singular,
}

pub const DEFAULT_EXACT_CAP: usize = 10_000;

#[derive(Debug, Clone)]
pub struct ExactResult {
    pub values: Vec<BigRational>,
    pub policy: Vec<usize>,
    pub iterations: usize,
}

/// Optimal reachability probabilities as exact rationals, by policy
/// iteration with exact linear solves.
pub fn exact_reach(mdp: &Mdp, target: &[bool], dir: Direction) -> Result<ExactResult, ExactError> {
    exact_reach_capped(mdp, target, dir, DEFAULT_EXACT_CAP)
}

pub fn exact_reach_capped(
    mdp: &Mdp,
    target: &[bool],
    dir: Direction,
    cap: usize,
) -> Result<ExactResult, ExactError> {
    let n = mdp.num_states();
    if n > cap {
        return Err(ExactError::TooLarge { states: n, cap });
    }
    let (prob0, prob1) = qualitative(mdp, target, dir);
    let maybe: Vec<usize> = (0..n).filter(|&s| !prob0[s] && !prob1[s]).collect();
    let mut slot = vec![usize::MAX; n];
    for (i, &s) in maybe.iter().enumerate() {
        slot[s] = i;
    }
    let mut policy: Vec<usize> = (0..n).map(|s| mdp.moves(s).start).collect();
    if dir == Direction::Max {
        // proper start: every maybe state moves toward the value-1 states
        let mut ranked = prob1.clone();
        loop {
            let mut next = Vec::new();
            for &s in &maybe {
                if ranked[s] {
                    continue;
                }
                if let Some(m) = mdp.moves(s).find(|&m| mdp.targets(m).any(|t| ranked[t])) {
                    policy[s] = m;
                    next.push(s);
                }
            }
            if next.is_empty() {
                break;
            }
            for s in next {
                ranked[s] = true;
            }
        }
    }

    let mut values: Vec<BigRational> = prob1
        .iter()
        .map(|&b| {
            if b {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        })
        .collect();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut rows = Vec::with_capacity(maybe.len());
        let mut rhs = Vec::with_capacity(maybe.len());
        for (i, &s) in maybe.iter().enumerate() {
            let mut row: Vec<(usize, BigRational)> = vec![(i, BigRational::one())];
            let mut b = BigRational::zero();
            for br in mdp.branches(policy[s]) {
                let t = mdp.target(br);
                let p = mdp.prob(br);
                if prob1[t] {
                    b += p;
                } else if slot[t] != usize::MAX {
                    let j = slot[t];
                    match row.iter_mut().find(|(k, _)| *k == j) {
                        Some((_, v)) => *v -= p,
                        None => row.push((j, -p.clone())),
                    }
                }
            }
            rows.push(row);
            rhs.push(b);
        }
        let x = solve_linear(&rows, &rhs).ok_or(ExactError::Singular)?;
        for (i, &s) in maybe.iter().enumerate() {
            values[s] = x[i].clone();
        }
        let mut switched = false;
        for &s in &maybe {
            let current = &values[s];
            let mut best: Option<(BigRational, usize)> = None;
            for m in mdp.moves(s) {
                let v = exact_move_value(mdp, m, &values);
                let better = match &best {
                    None => true,
                    Some((b, _)) => match dir {
                        Direction::Max => v > *b,
                        Direction::Min => v < *b,
                    },
                };
                if better {
                    best = Some((v, m));
                }
            }
            let (v, m) = best.expect("every state has a move");
            let improves = match dir {
                Direction::Max => v > *current,
                Direction::Min => v < *current,
            };
            if improves {
                policy[s] = m;
                switched = true;
            }
        }
        if !switched {
            break;
        }
    }
    Ok(ExactResult {
        values,
        policy,
        iterations,
    })
}

fn exact_move_value(mdp: &Mdp, m: usize, x: &[BigRational]) -> BigRational {
    let mut v = BigRational::zero();
    for b in mdp.branches(m) {
        let t = &x[mdp.target(b)];
        if !t.is_zero() {
            v += mdp.prob(b) * t;
        }
    }
    v
}

const PRIMES: [u64; 4] = [(1 << 61) - 1, (1 << 62) - 57, (1 << 63) - 25, u64::MAX - 58];

const MAX_ENTRY_BITS: u64 = 40;

/// Solves the sparse system `rows · x = rhs` exactly. Small integer systems
/// use p-adic lifting; anything else falls back to rational elimination.
pub fn solve_linear(
    rows: &[Vec<(usize, BigRational)>],
    rhs: &[BigRational],
) -> Option<Vec<BigRational>> {
    let n = rows.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let limit = BigInt::one() << MAX_ENTRY_BITS;
    let mut int_rows: Vec<Vec<(usize, i64)>> = Vec::with_capacity(n);
    let mut int_rhs: Vec<i64> = Vec::with_capacity(n);
    let mut small = true;
    for (row, b) in rows.iter().zip(rhs) {
        let mut scale = b.denom().clone();
        for (_, v) in row {
            scale = scale.lcm(v.denom());
        }
        let to_int = |v: &BigRational| v.numer() * (&scale / v.denom());
        let mut r = Vec::with_capacity(row.len());
        for (j, v) in row {
            let a = to_int(v);
            if a.abs() > limit {
                small = false;
                break;
            }
            r.push((*j, a.to_i64().expect("bounded")));
        }
        let bi = to_int(b);
        if !small || bi.abs() > limit {
            small = false;
            break;
        }
        int_rows.push(r);
        int_rhs.push(bi.to_i64().expect("bounded"));
    }
    if small {
        for &p in &PRIMES {
            if let Some(x) = dixon(&int_rows, &int_rhs, p) {
                return Some(x);
            }
        }
    }
    gauss(rows, rhs)
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

fn to_mod(v: i128, p: u64) -> u64 {
    v.rem_euclid(p as i128) as u64
}

/// LU factorisation modulo a prime with row pivoting.
struct ModLu {
    n: usize,
    p: u64,
    lu: Vec<u64>,
    perm: Vec<usize>,
}

impl ModLu {
    fn new(rows: &[Vec<(usize, i64)>], p: u64) -> Option<ModLu> {
        let n = rows.len();
        let mut lu = vec![0u64; n * n];
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                lu[i * n + j] = to_mod(v as i128, p);
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let pivot = (k..n).find(|&i| lu[i * n + k] != 0)?;
            if pivot != k {
                for j in 0..n {
                    lu.swap(k * n + j, pivot * n + j);
                }
                perm.swap(k, pivot);
            }
            let inv = powmod(lu[k * n + k], p - 2, p);
            for i in k + 1..n {
                let f = lu[i * n + k];
                if f == 0 {
                    continue;
                }
                let f = mulmod(f, inv, p);
                lu[i * n + k] = f;
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    if u != 0 {
                        let sub = mulmod(f, u, p);
                        let cur = lu[i * n + j];
                        lu[i * n + j] = if cur >= sub {
                            cur - sub
                        } else {
                            cur + (p - sub)
                        };
                    }
                }
            }
        }
        Some(ModLu { n, p, lu, perm })
    }

    fn solve(&self, b: &[u64]) -> Vec<u64> {
        let (n, p) = (self.n, self.p);
        let mut y: Vec<u64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[i * n + k];
                if l != 0 {
                    let sub = mulmod(l, y[k], p);
                    y[i] = if y[i] >= sub {
                        y[i] - sub
                    } else {
                        y[i] + (p - sub)
                    };
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[i * n + k];
                if u != 0 {
                    let sub = mulmod(u, y[k], p);
                    y[i] = if y[i] >= sub {
                        y[i] - sub
                    } else {
                        y[i] + (p - sub)
                    };
                }
            }
            y[i] = mulmod(y[i], powmod(self.lu[i * n + i], p - 2, p), p);
        }
        y
    }
}

/// Dixon's p-adic lifting followed by rational reconstruction and an exact
/// check of the candidate.
fn dixon(rows: &[Vec<(usize, i64)>], rhs: &[i64], p: u64) -> Option<Vec<BigRational>> {
    let n = rows.len();
    let lu = ModLu::new(rows, p)?;
    // Hadamard bound on numerators and the denominator
    let log_h: f64 = rows
        .iter()
        .zip(rhs)
        .map(|(row, &b)| {
            let sq: f64 = row
                .iter()
                .map(|&(_, v)| (v as f64) * (v as f64))
                .sum::<f64>()
                + (b as f64) * (b as f64);
            0.5 * sq.max(1.0).log2()
        })
        .sum();
    let log_p = (p as f64).log2();
    let mut steps = ((2.0 * log_h + 2.0) / log_p).ceil() as usize + 1;
    let p_big = BigInt::from(p);
    let mut residual: Vec<i128> = rhs.iter().map(|&b| b as i128).collect();
    let mut acc: Vec<BigInt> = vec![BigInt::zero(); n];
    let mut power = BigInt::one();
    let mut done = 0;
    for _round in 0..4 {
        while done < steps {
            let b_mod: Vec<u64> = residual.iter().map(|&r| to_mod(r, p)).collect();
            let xk = lu.solve(&b_mod);
            for (i, row) in rows.iter().enumerate() {
                let ax: i128 = row.iter().map(|&(j, v)| v as i128 * xk[j] as i128).sum();
                let diff = residual[i] - ax;
                debug_assert_eq!(diff.rem_euclid(p as i128), 0);
                residual[i] = diff.div_euclid(p as i128);
            }
            for (a, &x) in acc.iter_mut().zip(&xk) {
                *a += &power * BigInt::from(x);
            }
            power *= &p_big;
            done += 1;
        }
        let candidate: Option<Vec<BigRational>> =
            acc.iter().map(|a| reconstruct(a, &power)).collect();
        if let Some(x) = candidate {
            if verify(rows, rhs, &x) {
                return Some(x);
            }
        }
        steps *= 2;
    }
    None
}

/// Finds `a / b` with `a ≡ b·x (mod m)` and `|a|, b ≤ sqrt(m / 2)`.
fn reconstruct(x: &BigInt, m: &BigInt) -> Option<BigRational> {
    let bound = (m / BigInt::from(2)).sqrt();
    let (mut r0, mut r1) = (m.clone(), x.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound {
        return None;
    }
    Some(BigRational::new(r1, t1))
}

fn verify(rows: &[Vec<(usize, i64)>], rhs: &[i64], x: &[BigRational]) -> bool {
    rows.iter().zip(rhs).all(|(row, &b)| {
        let mut sum = BigRational::zero();
        for &(j, v) in row {
            sum += &x[j] * BigRational::from_integer(BigInt::from(v));
        }
        sum == BigRational::from_integer(BigInt::from(b))
    })
}

/// Dense Gaussian elimination over the rationals.
fn gauss(rows: &[Vec<(usize, BigRational)>], rhs: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = rows.len();
    let mut m: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); n + 1]; n];
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row {
            m[i][*j] += v;
        }
        m[i][n] = rhs[i].clone();
    }
    for k in 0..n {
        let pivot = (k..n).find(|&i| !m[i][k].is_zero())?;
        m.swap(k, pivot);
        let inv = m[k][k].recip();
        for j in k..=n {
            m[k][j] = &m[k][j] * &inv;
        }
        for i in 0..n {
            if i != k && !m[i][k].is_zero() {
                let f = m[i][k].clone();
                for j in k..=n {
                    let sub = &f * &m[k][j];
                    m[i][j] -= sub;
                }
            }
        }
    }
    Some(
        m.into_iter()
            .map(|mut r| r.pop().expect("augmented"))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn lifting_and_elimination_agree() {
        let rows = vec![
            vec![(0, r(1, 1)), (1, r(-1, 3))],
            vec![(0, r(-1, 7)), (1, r(1, 1))],
        ];
        let rhs = vec![r(1, 2), r(2, 5)];
        let a = solve_linear(&rows, &rhs).unwrap();
        let b = gauss(&rows, &rhs).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn one_third_chain() {
        let mut b = MdpBuilder::new();
        let a = b.action("a");
        b.add_state(&[]);
        b.add_move(a, &[(1, r(1, 3)), (2, r(2, 3))]);
        b.close_state();
        for s in 1..3 {
            b.add_state(&[]);
            b.add_move(a, &[(s, r(1, 1))]);
            b.close_state();
        }
        let mdp = b.build().unwrap();
        let res = exact_reach(&mdp, &[false, true, false], Direction::Max).unwrap();
        assert_eq!(res.values[0], r(1, 3));
    }

    #[test]
    fn min_of_two_moves_is_exact() {
        let mut b = MdpBuilder::new();
        let a = b.action("a");
        let c = b.action("c");
        b.add_state(&[]);
        b.add_move(a, &[(1, r(3, 10)), (2, r(7, 10))]);
        b.add_move(c, &[(1, r(7, 10)), (2, r(3, 10))]);
        b.close_state();
        for s in 1..3 {
            b.add_state(&[]);
            b.add_move(a, &[(s, r(1, 1))]);
            b.close_state();
        }
        let mdp = b.build().unwrap();
        let res = exact_reach(&mdp, &[false, true, false], Direction::Min).unwrap();
        assert_eq!(res.values[0], r(3, 10));
    }

    #[test]
    fn cap_refuses() {
        let mut b = MdpBuilder::new();
        let a = b.action("a");
        for _ in 0..3 {
            b.add_state(&[]);
            b.add_move(a, &[(b.current(), r(1, 1))]);
            b.close_state();
        }
        let mdp = b.build().unwrap();
        assert_eq!(
            exact_reach_capped(&mdp, &[true, false, false], Direction::Max, 2).unwrap_err(),
            ExactError::TooLarge { states: 3, cap: 2 }
        );
    }
}
