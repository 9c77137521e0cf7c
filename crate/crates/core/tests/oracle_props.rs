mod common;

use std::collections::HashSet;

use common::{naive_stable, random_game, rng};
use hedonic_core::oracle::{
    bell, binomial, count_stable, enumerate_partitions, exists_stable, stable_block_counts, stirling2,
};
use hedonic_core::{Concept, HedonicGame};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use proptest::prelude::*;

/// `S(n, k) · k! = Σ_i (−1)^{k−i} C(k, i) i^n`, in exact integers.
fn stirling_alternating(n: usize, k: usize) -> BigInt {
    let mut acc = BigInt::zero();
    for i in 0..=k {
        let term = BigInt::from(binomial(k, i)) * BigInt::from(i).pow(n as u32);
        if (k - i).is_multiple_of(2) {
            acc += term;
        } else {
            acc -= term;
        }
    }
    let fact: BigInt = (1..=k).map(BigInt::from).product();
    assert!((&acc % &fact).is_zero());
    acc / fact
}

#[test]
fn stirling_matches_alternating_sum() {
    for n in 0..=40 {
        for k in 0..=n {
            assert_eq!(BigInt::from(stirling2(n, k)), stirling_alternating(n, k), "S({n},{k})");
        }
    }
}

#[test]
fn enumeration_counts_match_combinatorics() {
    for n in 1..=10 {
        let all: Vec<_> = enumerate_partitions(n, None).unwrap().collect();
        assert_eq!(BigUint::from(all.len()), bell(n));
        let distinct: HashSet<Vec<Vec<usize>>> = all.iter().map(|p| p.coalitions().to_vec()).collect();
        assert_eq!(distinct.len(), all.len());
        for k in 1..=n {
            assert_eq!(
                BigUint::from(enumerate_partitions(n, Some(k)).unwrap().count()),
                stirling2(n, k)
            );
        }
    }
    for n in 11..=12 {
        let sum: BigUint = (0..=n).map(|k| stirling2(n, k)).sum();
        assert_eq!(BigUint::from(enumerate_partitions(n, None).unwrap().count()), sum);
    }
}

#[test]
fn binomial_matches_pascal() {
    let mut row = vec![BigUint::one()];
    for n in 1..=60 {
        let mut next = vec![BigUint::one(); n + 1];
        for k in 1..n {
            next[k] = &row[k - 1] + &row[k];
        }
        row = next;
        for (k, v) in row.iter().enumerate() {
            assert_eq!(&binomial(n, k), v);
        }
    }
}

#[test]
fn contractual_individual_and_rational_always_exist() {
    let mut r = rng(21);
    for i in 0..1000 {
        let n = 1 + i % 7;
        let game = random_game(&mut r, n);
        assert!(count_stable(&game, Concept::ContractualIndividual).unwrap() >= BigUint::one());
        assert!(count_stable(&game, Concept::IndividuallyRational).unwrap() >= BigUint::one());
    }
}

#[test]
fn counts_respect_concept_containment() {
    let mut r = rng(22);
    for i in 0..300 {
        let game = random_game(&mut r, 1 + i % 6);
        let count = |c| count_stable(&game, c).unwrap();
        let ns = count(Concept::Nash);
        let is = count(Concept::Individual);
        let cns = count(Concept::ContractualNash);
        let cis = count(Concept::ContractualIndividual);
        assert!(ns <= is && is <= cis && ns <= cns && cns <= cis);
    }
}

#[test]
fn exhaustive_counts_agree_with_reference_checker() {
    let mut r = rng(23);
    for i in 0..60 {
        let game = random_game(&mut r, 1 + i % 6);
        for c in Concept::ALL {
            let reference = enumerate_partitions(game.n(), None)
                .unwrap()
                .filter(|p| naive_stable(&game, p, c))
                .count();
            assert_eq!(count_stable(&game, c).unwrap(), BigUint::from(reference));
            let first = enumerate_partitions(game.n(), None)
                .unwrap()
                .find(|p| naive_stable(&game, p, c));
            assert_eq!(exists_stable(&game, c).unwrap(), first);
        }
        let per_k = stable_block_counts(&game, Concept::Nash).unwrap();
        for (k, &found) in per_k.iter().enumerate().skip(1) {
            let reference = enumerate_partitions(game.n(), Some(k))
                .unwrap()
                .any(|p| naive_stable(&game, &p, Concept::Nash));
            assert_eq!(found, reference);
        }
    }
}

#[test]
fn mutual_liking_pair_has_one_nash_partition() {
    let game = HedonicGame::from_rows(vec![vec![0.0, 0.4], vec![0.9, 0.0]]).unwrap();
    assert_eq!(count_stable(&game, Concept::Nash).unwrap(), BigUint::one());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn existence_consistent_with_count(n in 1usize..=6, seed in any::<u64>()) {
        let game = random_game(&mut rng(seed), n);
        for c in Concept::ALL {
            let count = count_stable(&game, c).unwrap();
            prop_assert_eq!(exists_stable(&game, c).unwrap().is_some(), !count.is_zero());
        }
    }

    #[test]
    fn stirling_recurrence(n in 1usize..60, k in 1usize..60) {
        let lhs = stirling2(n, k);
        let rhs = BigUint::from(k) * stirling2(n - 1, k) + stirling2(n - 1, k - 1);
        prop_assert_eq!(lhs, rhs);
    }
}
