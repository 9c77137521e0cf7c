//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls the library's checkers: concepts are re-derived from
//! the definitions using only utilities, coalition lists and deviations.

#![allow(dead_code)]

use std::collections::HashMap;

use hedonic_core::three_stage::{AlgoConfig, Observation, Stage, ThreeStageOutput};
use hedonic_core::{enumerate_deviations, Concept, HedonicGame, Partition, Target};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn members_after(partition: &Partition, target: Target) -> Vec<usize> {
    match target {
        Target::Join(c) => partition.coalitions()[c].clone(),
        Target::NewSingleton => Vec::new(),
    }
}

fn sum(game: &HedonicGame, a: usize, coalition: &[usize]) -> f64 {
    coalition.iter().filter(|&&b| b != a).map(|&b| game.utility(a, b)).sum()
}

/// Decides a concept straight from its definition.
pub fn naive_stable(game: &HedonicGame, partition: &Partition, concept: Concept) -> bool {
    let n = game.n();
    let own = |a: usize| &partition.coalitions()[partition.coalition_of(a)];
    match concept {
        Concept::IndividuallyRational => (0..n).all(|a| sum(game, a, own(a)) >= 0.0),
        Concept::ExitDenied => (0..n).all(|a| own(a).iter().any(|&b| b != a && game.utility(b, a) > 0.0)),
        Concept::EnterDenied => (0..n).all(|a| {
            partition
                .coalitions()
                .iter()
                .enumerate()
                .filter(|&(c, _)| c != partition.coalition_of(a))
                .all(|(_, c)| c.iter().any(|&b| game.utility(b, a) < 0.0))
        }),
        _ => {
            let (entry, exit) = match concept {
                Concept::Nash => (false, false),
                Concept::Individual => (true, false),
                Concept::ContractualNash => (false, true),
                _ => (true, true),
            };
            !enumerate_deviations(game, partition).into_iter().any(|d| {
                let a = d.agent;
                let target = members_after(partition, d.target);
                let improves = sum(game, a, &target) > sum(game, a, own(a));
                let welcome = !entry || target.iter().all(|&b| game.utility(b, a) >= 0.0);
                let released = !exit || own(a).iter().all(|&b| b == a || game.utility(b, a) <= 0.0);
                improves && welcome && released
            })
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A uniformly random labelling turned into a partition (not uniform over partitions).
pub fn random_partition(rng: &mut impl Rng, n: usize) -> Partition {
    let k = rng.random_range(1..=n);
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    Partition::from_labels(&labels).unwrap()
}

pub fn random_game(rng: &mut impl Rng, n: usize) -> HedonicGame {
    HedonicGame::from_fn(n, |_, _| rng.random_range(-1.0..1.0)).unwrap()
}

/// Structural failures of one algorithm run; empty when every property holds.
///
/// Clique, merge and ledger checks apply to stage-2-success runs, placement
/// checks to stage-3-success runs; partition validity always.
pub fn structural_violations(game: &HedonicGame, cfg: &AlgoConfig, out: &ThreeStageOutput) -> Vec<String> {
    let mut bad = Vec::new();
    let n = game.n();
    let p = &out.partition;
    let mut seen = vec![0usize; n];
    for c in p.coalitions() {
        if c.is_empty() {
            bad.push("empty coalition".into());
        }
        for &a in c {
            seen[a] += 1;
        }
    }
    if seen.iter().any(|&k| k != 1) || p.n() != n {
        bad.push("output is not a partition of the agents".into());
    }

    let r = &out.report;
    let t = &out.trace;
    let s = cfg.clique_size(n);
    if r.stage2_success {
        let mut clique_of = vec![usize::MAX; n];
        let mut id = 0;
        for (g, cliques) in t.cliques.iter().enumerate() {
            for c in cliques.coalitions() {
                if c.len() != s {
                    bad.push(format!("clique {c:?} has size {} != {s}", c.len()));
                }
                for &a in c {
                    if t.groups.group_of[a] != g {
                        bad.push(format!("agent {a} in a clique of group {g}"));
                    }
                    clique_of[a] = id;
                    for &b in c {
                        if a != b && game.utility(a, b) < cfg.tau {
                            bad.push(format!("clique pair ({a}, {b}) below threshold"));
                        }
                    }
                }
                id += 1;
            }
        }
        let mut below: HashMap<(usize, usize), usize> = HashMap::new();
        for e in out.ledger.entries() {
            if e.stage == Stage::One {
                if e.observed == Observation::Raw {
                    bad.push("raw stage-1 entry".into());
                }
                if e.observed == Observation::BelowThreshold {
                    // Only agents still unplaced while the clique grew were
                    // candidates for it; cliques are numbered in creation order.
                    for (x, y) in [(e.source, e.target), (e.target, e.source)] {
                        let c = clique_of[y];
                        if c != usize::MAX && (clique_of[x] == usize::MAX || clique_of[x] > c) {
                            *below.entry((x, c)).or_default() += 1;
                        }
                    }
                }
            } else if e.observed != Observation::Raw {
                bad.push("thresholded entry outside stage 1".into());
            }
        }
        if let Some(((a, c), k)) = below.iter().find(|(_, &k)| k > 1) {
            bad.push(format!("agent {a} has {k} below-threshold entries toward clique {c}"));
        }
        for (j, merged) in t.clustering.merged.coalitions().iter().enumerate() {
            let picks = &t.clustering.sources[j];
            if picks.len() != cfg.groups {
                bad.push(format!("merged coalition {j} draws from {} groups", picks.len()));
                continue;
            }
            let mut union: Vec<usize> = picks
                .iter()
                .enumerate()
                .flat_map(|(g, &ci)| t.cliques[g].coalitions()[ci].iter().copied())
                .collect();
            union.sort_unstable();
            if &union != merged || merged.len() != cfg.groups * s {
                bad.push(format!("merged coalition {j} is not one clique per group"));
            }
        }
    }
    if r.stage3_success {
        let merged = t.clustering.merged.coalitions();
        let mut used = vec![false; merged.len()];
        for pl in &t.placements {
            let c = &merged[pl.coalition];
            if std::mem::replace(&mut used[pl.coalition], true) {
                bad.push(format!("coalition {} received two remainder agents", pl.coalition));
            }
            let u: f64 = c.iter().map(|&b| game.utility(pl.agent, b)).sum();
            if u <= 0.0 {
                bad.push(format!(
                    "remainder agent {} has utility {u} for its coalition",
                    pl.agent
                ));
            }
            let contact = c.iter().any(|&b| {
                matches!(out.ledger.get(pl.agent, b), Some((Stage::Two, _)))
                    || matches!(out.ledger.get(b, pl.agent), Some((Stage::Two, _)))
            });
            if contact {
                bad.push(format!(
                    "remainder agent {} was inspected by its coalition in stage 2",
                    pl.agent
                ));
            }
        }
        if t.placements.len() != r.remainder_total {
            bad.push("not every remainder agent was placed".into());
        }
    }
    bad
}
