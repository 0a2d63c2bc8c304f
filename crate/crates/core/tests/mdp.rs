mod support;

use num::ToPrimitive;
use proptest::prelude::*;
use pta_core::mdp::{
    exact_reach, max_reach, mec_decompose, min_reach, rabin_accepting_states,
    streett_accepting_states, Direction, LabelPair, ReachOptions, StreettPair,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mecs_match_subset_enumeration(seed in any::<u64>(), n in 1usize..=7) {
        let mdp = random_mdp(&mut rng(seed), n, 3, 3);
        let mut got: Vec<(Vec<usize>, Vec<usize>)> = mec_decompose(&mdp)
            .into_iter()
            .map(|ec| {
                let mut m = ec.moves;
                m.sort_unstable();
                (ec.states, m)
            })
            .collect();
        got.sort();
        prop_assert_eq!(got, mec_oracle(&mdp));
    }

    #[test]
    fn accepting_states_match_enumeration(seed in any::<u64>(), n in 1usize..=7, with_tick in any::<bool>()) {
        let mdp = random_mdp(&mut rng(seed), n, 3, 2);
        let pairs = vec![
            (states_with(&mdp, "a"), states_with(&mdp, "b")),
            (states_with(&mdp, "b"), states_with(&mdp, "a")),
        ];
        let tick_set = states_with(&mdp, "c");
        let tick = with_tick.then_some(tick_set.as_slice());
        let rabin: Vec<LabelPair> = pairs
            .iter()
            .map(|(a, v)| LabelPair { avoid: a.clone(), visit: v.clone() })
            .collect();
        prop_assert_eq!(rabin_accepting_states(&mdp, &rabin, tick), rabin_oracle(&mdp, &pairs, tick));
        let streett: Vec<StreettPair> = pairs
            .iter()
            .map(|(r, h)| StreettPair { request: r.clone(), response: h.clone() })
            .collect();
        prop_assert_eq!(streett_accepting_states(&mdp, &streett, tick), streett_oracle(&mdp, &pairs, tick));
    }

    #[test]
    fn solvers_match_scheduler_enumeration(seed in any::<u64>(), n in 1usize..=6) {
        let mdp = random_mdp(&mut rng(seed), n, 3, 3);
        let target = states_with(&mdp, "a");
        let opts = ReachOptions::default();
        for (dir, maximise) in [(Direction::Max, true), (Direction::Min, false)] {
            let want = enumerate_optimum(&mdp, &target, maximise);
            let exact = exact_reach(&mdp, &target, dir).unwrap();
            prop_assert_eq!(&exact.values, &want);
            let vi = if maximise { max_reach(&mdp, &target, &opts) } else { min_reach(&mdp, &target, &opts) };
            for s in 0..n {
                prop_assert!((vi.values[s] - want[s].to_f64().unwrap()).abs() <= 10.0 * opts.tol);
            }
        }
    }

    #[test]
    fn residuals_never_increase(seed in any::<u64>(), n in 1usize..=60) {
        let mdp = random_mdp(&mut rng(seed), n, 3, 4);
        let target = states_with(&mdp, "a");
        for r in [max_reach(&mdp, &target, &ReachOptions::default()), min_reach(&mdp, &target, &ReachOptions::default())] {
            prop_assert!(r.converged);
            prop_assert!(r.residuals.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}

#[test]
fn threads_do_not_change_values() {
    let mdp = random_mdp(&mut rng(11), 150, 3, 3);
    let target = states_with(&mdp, "a");
    let one = max_reach(&mdp, &target, &ReachOptions::default());
    let four = max_reach(
        &mdp,
        &target,
        &ReachOptions {
            threads: 4,
            ..ReachOptions::default()
        },
    );
    assert_eq!(one.values, four.values);
}
