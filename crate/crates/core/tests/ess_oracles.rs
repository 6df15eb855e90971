use num_traits::Signed;
use proptest::prelude::*;

use esslab_core::ess::{all_ess, check_ess, ess_enumerate, invasion_threshold, strategy_grid};
use esslab_core::rational::int;
use esslab_core::{expected_payoff, MixedStrategy, SymmetricGame};

fn game(rows: &[Vec<i64>]) -> SymmetricGame {
    SymmetricGame::new(rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect()).unwrap()
}

/// Pure `i` is an ESS iff every `j` either does worse against `i`, or ties
/// against `i` and does worse against itself than `i` does against it.
fn pure_ess_by_definition(a: &[Vec<i64>], i: usize) -> bool {
    (0..a.len())
        .filter(|&j| j != i)
        .all(|j| a[i][i] > a[j][i] || (a[i][i] == a[j][i] && a[i][j] > a[j][j]))
}

fn matrices() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1usize..=4).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(-3i64..4, n), n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn pure_verdicts_match_the_definition(a in matrices()) {
        let g = game(&a);
        for i in 0..a.len() {
            let v = check_ess(&g, &MixedStrategy::pure(a.len(), i)).unwrap();
            prop_assert_eq!(v.is_ess, pure_ess_by_definition(&a, i), "strategy {}", i);
        }
    }

    #[test]
    fn every_ess_repels_grid_mutants(a in matrices()) {
        let g = game(&a);
        let e = ess_enumerate(&g).unwrap();
        for s in e.ess() {
            for t in strategy_grid(a.len(), 4).iter().filter(|t| *t != s) {
                prop_assert!(invasion_threshold(&g, s, t).unwrap().resists());
            }
        }
    }

    #[test]
    fn isolated_search_finds_every_ess(a in matrices()) {
        let g = game(&a);
        let full: Vec<MixedStrategy> = ess_enumerate(&g).unwrap().ess().cloned().collect();
        prop_assert_eq!(all_ess(&g).unwrap(), full);
    }

    #[test]
    fn enumerated_equilibria_are_nash(a in matrices()) {
        let g = game(&a);
        let e = ess_enumerate(&g).unwrap();
        for c in &e.equilibria {
            let value = expected_payoff(&g, &c.strategy, &c.strategy).unwrap();
            for j in 0..a.len() {
                let dev = expected_payoff(&g, &MixedStrategy::pure(a.len(), j), &c.strategy).unwrap();
                prop_assert!(!(dev - &value).is_positive());
            }
        }
    }

    #[test]
    fn counterexamples_invade(a in matrices(), pick in 0usize..4) {
        let g = game(&a);
        let s = MixedStrategy::pure(a.len(), pick % a.len());
        let v = check_ess(&g, &s).unwrap();
        if let Some(t) = &v.counterexample {
            prop_assert!(!invasion_threshold(&g, &s, t).unwrap().resists());
        }
    }
}
