mod common;

use common::{members_after, naive_stable};
use hedonic_core::game::Target;
use hedonic_core::stability::check_labels;
use hedonic_core::{
    check, enumerate_deviations, evaluate_all, implied_concepts, Concept, HedonicGame, Partition, Witness,
};
use proptest::prelude::*;

fn game_and_partition(max_n: usize) -> impl Strategy<Value = (HedonicGame, Partition)> {
    (1..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(-1.0f64..1.0, n * n),
            prop::collection::vec(0..n, n),
        )
            .prop_map(move |(mut u, labels)| {
                for a in 0..n {
                    u[a * n + a] = 0.0;
                }
                (
                    HedonicGame::new(n, u).unwrap(),
                    Partition::from_labels(&labels).unwrap(),
                )
            })
    })
}

fn utility_of(game: &HedonicGame, a: usize, coalition: &[usize]) -> f64 {
    coalition.iter().filter(|&&b| b != a).map(|&b| game.utility(a, b)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn coalition_utility_is_additive((game, p) in game_and_partition(8)) {
        let n = game.n();
        for a in 0..n {
            let others: Vec<usize> = (0..n).filter(|&b| b != a).collect();
            let (left, right) = others.split_at(others.len() / 2);
            let whole = game.coalition_utility(a, &others).unwrap();
            let parts = game.coalition_utility(a, left).unwrap() + game.coalition_utility(a, right).unwrap();
            prop_assert!((whole - parts).abs() < 1e-12);
        }
        let _ = p;
    }

    #[test]
    fn favor_sets_are_disjoint_subsets((game, p) in game_and_partition(8)) {
        for c in p.coalitions() {
            for a in 0..game.n() {
                let fin = game.favor_in(c, a).unwrap();
                let fout = game.favor_out(c, a).unwrap();
                prop_assert!(fin.iter().all(|b| !fout.contains(b)));
                prop_assert!(fin.iter().chain(&fout).all(|&b| b != a && c.contains(&b)));
            }
        }
    }

    #[test]
    fn deviation_count_formula((game, p) in game_and_partition(8)) {
        let expected: usize = (0..game.n())
            .map(|a| p.len() - 1 + usize::from(p.coalitions()[p.coalition_of(a)].len() > 1))
            .sum();
        prop_assert_eq!(enumerate_deviations(&game, &p).len(), expected);
    }

    #[test]
    fn checker_matches_definitions((game, p) in game_and_partition(8)) {
        for c in Concept::ALL {
            prop_assert_eq!(check(&game, &p, c).unwrap().stable, naive_stable(&game, &p, c), "{}", c);
        }
    }

    #[test]
    fn joint_evaluation_matches_single_checks((game, p) in game_and_partition(8)) {
        let flags = evaluate_all(&game, &p).unwrap();
        for c in Concept::ALL {
            prop_assert_eq!(flags.get(c), check(&game, &p, c).unwrap().stable);
        }
        prop_assert!(implied_concepts(&flags.to_map()).unwrap().is_empty());
    }

    #[test]
    fn witnesses_are_genuine((game, p) in game_and_partition(8)) {
        for c in Concept::ALL {
            let v = check(&game, &p, c).unwrap();
            prop_assert_eq!(v.stable, v.witness.is_none());
            match v.witness {
                Some(Witness::Deviation(d)) => {
                    let a = d.agent;
                    let own = &p.coalitions()[p.coalition_of(a)];
                    let target = members_after(&p, d.target);
                    prop_assert!(utility_of(&game, a, &target) > utility_of(&game, a, own));
                    if matches!(c, Concept::Individual | Concept::ContractualIndividual) {
                        prop_assert!(target.iter().all(|&b| game.utility(b, a) >= 0.0));
                    }
                    if matches!(c, Concept::ContractualNash | Concept::ContractualIndividual) {
                        prop_assert!(own.iter().all(|&b| b == a || game.utility(b, a) <= 0.0));
                    }
                    if let Target::Join(t) = d.target {
                        prop_assert_ne!(t, p.coalition_of(a));
                    }
                    // Applying the deviation yields a valid partition.
                    prop_assert_eq!(p.apply(d).unwrap().n(), game.n());
                }
                Some(Witness::Blocking { agent, coalition }) => {
                    prop_assert!(agent < game.n() && coalition < p.len());
                }
                None => {}
            }
        }
    }

    #[test]
    fn singletons_are_never_exit_denied((game, p) in game_and_partition(8)) {
        if p.has_singleton() {
            prop_assert!(!check(&game, &p, Concept::ExitDenied).unwrap().stable);
        }
    }
}

#[test]
fn witness_prefers_lowest_agent_then_target() {
    // Everyone would rather be with agent 2.
    let game = HedonicGame::from_fn(3, |_, b| if b == 2 { 1.0 } else { -0.1 }).unwrap();
    let p = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
    let v = check(&game, &p, Concept::Nash).unwrap();
    assert_eq!(
        v.witness,
        Some(Witness::Deviation(hedonic_core::Deviation {
            agent: 0,
            target: Target::Join(1)
        }))
    );
}

#[test]
fn label_checks_reject_gaps() {
    let game = HedonicGame::from_fn(3, |_, _| 0.1).unwrap();
    assert!(check_labels(&game, &[0, 2, 2], 3, Concept::Nash).is_err());
    assert!(check_labels(&game, &[0, 1], 2, Concept::Nash).is_err());
    assert!(check_labels(&game, &[0, 1, 1], 2, Concept::Nash).is_ok());
}
