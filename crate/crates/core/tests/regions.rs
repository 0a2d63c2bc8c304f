mod support;

use std::collections::BTreeMap;

use num::{BigRational, Zero};
use proptest::prelude::*;
use pta_core::bench::{
    gen_robot, gen_task_completion, running_example, RobotParams, RunningConstants, TaskParams,
};
use pta_core::mdp::{check_pta, CheckOptions};
use pta_core::model::{ClockId, ClockSet, Constraint, Time, Valuation};
use pta_core::region::{build_region_mdp, Region, RegionError, RegionOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::*;

fn atom(x: usize, kind: u8, c: u32) -> Constraint {
    let x = ClockId(x);
    match kind % 4 {
        0 => Constraint::upper(x, c),
        1 => Constraint::lower(c, x),
        2 => Constraint::upper(x, c).negate(),
        _ => Constraint::lower(c, x).negate(),
    }
}

fn quarter(n: u32) -> Time {
    BigRational::new(n.into(), 4.into())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn region_membership_decides_constraints(
        ceilings in prop::collection::vec(0u16..=5, 1..=3),
        quarters in prop::collection::vec(0u32..=28, 3),
        atoms in prop::collection::vec((0usize..3, any::<u8>(), 0u32..=5), 1..=3),
    ) {
        let n = ceilings.len();
        let v = Valuation::from_values(quarters[..n].iter().map(|&q| quarter(q)).collect()).unwrap();
        let c = Constraint::conjunction(atoms.iter().map(|&(x, k, c)| {
            let x = x % n;
            atom(x, k, c.min(u32::from(ceilings[x])))
        }));
        let r = Region::of(&v, &ceilings);
        prop_assert_eq!(r.satisfies(&c, &ceilings).unwrap(), c.eval(&v).unwrap());
        prop_assert_eq!(Region::of(&r.sample(&ceilings), &ceilings), r);
    }

    #[test]
    fn time_passes_through_successive_regions(
        ceilings in prop::collection::vec(0u16..=4, 1..=3),
        quarters in prop::collection::vec(0u32..=24, 3),
    ) {
        let n = ceilings.len();
        let v = Valuation::from_values(quarters[..n].iter().map(|&q| quarter(q)).collect()).unwrap();
        let mut current = Region::of(&v, &ceilings);
        for k in 1..=384 {
            let later = Region::of(&v.elapse(&BigRational::new(k.into(), 64.into())).unwrap(), &ceilings);
            if later != current {
                prop_assert_eq!(&later, &current.delay_successor(&ceilings));
                current = later;
            }
        }
        prop_assert_eq!(current.delay_successor(&ceilings), current);
    }
}

#[test]
fn one_clock_region_counts() {
    for m in 0..=5u16 {
        assert_eq!(Region::enumerate(&[m]).len(), 2 * usize::from(m) + 2);
    }
}

#[test]
fn diagonal_constraints_are_refused() {
    let x = ClockId(0);
    let c = Constraint::diagonal(x, 1, ClockId(1), 0);
    let r = Region::zero(2);
    assert!(matches!(
        r.satisfies(&c, &[2, 2]),
        Err(RegionError::UnsupportedConstraint(_))
    ));
}

#[test]
fn concrete_successors_land_in_abstract_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let pta = random_pta(&mut rng);
        for opts in [RegionOptions::plain(), RegionOptions::default()] {
            let reg = build_region_mdp(&pta, &opts).unwrap();
            let mdp = &reg.mdp;
            let all = ClockSet::all(pta.clock_count());
            for (s, (l, r)) in reg.states.iter().enumerate() {
                let v = r.sample(&reg.ceilings);
                for e in pta.edges_from(*l) {
                    if !e.guard.eval(&v).unwrap() {
                        continue;
                    }
                    let name = &pta.actions()[e.action.0];
                    let m = mdp
                        .moves(s)
                        .find(|&m| &mdp.action_names()[mdp.move_action(m)] == name)
                        .expect("enabled action has a move");
                    let mut want: BTreeMap<usize, BigRational> = BTreeMap::new();
                    for br in e.distribution.branches() {
                        let mut r2 = Region::of(&v.reset(br.resets).unwrap(), &reg.ceilings);
                        r2.forget(all.difference(reg.active[br.target.0]), &reg.ceilings);
                        let t = reg.state_of(br.target, &r2).expect("successor is a state");
                        *want.entry(t).or_insert_with(BigRational::zero) += &br.prob;
                    }
                    let got: BTreeMap<usize, BigRational> = mdp
                        .branches(m)
                        .map(|b| (mdp.target(b), mdp.prob(b).clone()))
                        .collect();
                    assert_eq!(got, want);
                }
            }
        }
    }
}

#[test]
fn plain_and_reduced_regions_agree() {
    let mut plain = CheckOptions::default();
    plain.region = RegionOptions::plain();
    let mut instances = vec![
        gen_task_completion(&TaskParams::two_task()).unwrap(),
        gen_robot(&RobotParams::grid3x2()).unwrap(),
        running_example(RunningConstants::default()).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let pta = random_pta(&mut rng);
        let last = pta_core::model::LocationId(pta.locations().len() - 1);
        let accepting = [last].into_iter().collect();
        let (pta, dtra, q) = pta_core::bench::reachability_reduction(&pta, &accepting).unwrap();
        let mut inst = instances[0].clone();
        inst.pta = pta;
        inst.dtra = dtra;
        inst.mode = q;
        instances.push(inst);
    }
    for inst in &instances {
        let a = check_pta(&inst.pta, &inst.dtra, inst.mode, &CheckOptions::default()).unwrap();
        let b = check_pta(&inst.pta, &inst.dtra, inst.mode, &plain).unwrap();
        assert!(b.states >= a.states);
        assert!((a.p_min - b.p_min).abs() < 1e-7, "{} {}", a.p_min, b.p_min);
        assert!((a.p_max - b.p_max).abs() < 1e-7, "{} {}", a.p_max, b.p_max);
    }
}
