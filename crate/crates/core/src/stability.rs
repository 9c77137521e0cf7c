//! Deviation-based solution concepts and their logical lattice.
//!
//! All checks work on a block-label view of a partition (`labels[a]` is the
//! coalition index of agent `a`), so the exhaustive oracle can test
//! restricted-growth strings without materialising coalitions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Agent, Deviation, HedonicGame, Partition, Target};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Concept {
    Nash,
    Individual,
    ContractualNash,
    ContractualIndividual,
    IndividuallyRational,
    EnterDenied,
    ExitDenied,
}

impl Concept {
    pub const ALL: [Concept; 7] = [
        Concept::Nash,
        Concept::Individual,
        Concept::ContractualNash,
        Concept::ContractualIndividual,
        Concept::IndividuallyRational,
        Concept::EnterDenied,
        Concept::ExitDenied,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Concept::Nash => "nash",
            Concept::Individual => "individual",
            Concept::ContractualNash => "contractual-nash",
            Concept::ContractualIndividual => "contractual-individual",
            Concept::IndividuallyRational => "individually-rational",
            Concept::EnterDenied => "enter-denied",
            Concept::ExitDenied => "exit-denied",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Concept {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match key.as_str() {
            "nash" | "ns" => Concept::Nash,
            "individual" | "is" => Concept::Individual,
            "contractual-nash" | "cns" => Concept::ContractualNash,
            "contractual-individual" | "cis" => Concept::ContractualIndividual,
            "individually-rational" | "ir" => Concept::IndividuallyRational,
            "enter-denied" => Concept::EnterDenied,
            "exit-denied" => Concept::ExitDenied,
            _ => return Err(Error::input(format!("unknown concept {s:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Witness {
    /// A profitable deviation that the concept does not forbid.
    Deviation(Deviation),
    /// An agent together with the coalition that violates the property:
    /// its own coalition for IR and exit denial, the open coalition for enter denial.
    Blocking { agent: Agent, coalition: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub stable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn stable() -> Self {
        Verdict {
            stable: true,
            witness: None,
        }
    }

    pub fn unstable(witness: Witness) -> Self {
        Verdict {
            stable: false,
            witness: Some(witness),
        }
    }
}

/// Per-agent view of a labelled partition: utility toward every coalition
/// and, for every coalition, how many members like or dislike the agent.
struct AgentView<'a> {
    game: &'a HedonicGame,
    labels: &'a [usize],
    sizes: Vec<usize>,
    util: Vec<f64>,
    likes: Vec<u32>,
    dislikes: Vec<u32>,
}

impl<'a> AgentView<'a> {
    fn new(game: &'a HedonicGame, labels: &'a [usize], blocks: usize) -> Self {
        let mut sizes = vec![0; blocks];
        for &l in labels {
            sizes[l] += 1;
        }
        AgentView {
            game,
            labels,
            sizes,
            util: vec![0.0; blocks],
            likes: vec![0; blocks],
            dislikes: vec![0; blocks],
        }
    }

    fn load_utilities(&mut self, a: Agent) {
        self.util.fill(0.0);
        for (b, &u) in self.game.row(a).iter().enumerate() {
            // Diagonal is zero, so including b == a is harmless.
            self.util[self.labels[b]] += u;
        }
    }

    fn load_attitudes(&mut self, a: Agent) {
        self.likes.fill(0);
        self.dislikes.fill(0);
        for b in 0..self.labels.len() {
            if b == a {
                continue;
            }
            let u = self.game.utility(b, a);
            let c = self.labels[b];
            if u > 0.0 {
                self.likes[c] += 1;
            } else if u < 0.0 {
                self.dislikes[c] += 1;
            }
        }
    }

    /// First deviation of `a` that improves it and meets the consent rules.
    fn find_deviation(&self, a: Agent, need_entry_consent: bool, need_exit_consent: bool) -> Option<Deviation> {
        let own = self.labels[a];
        if need_exit_consent && self.likes[own] > 0 {
            return None;
        }
        let current = self.util[own];
        for c in 0..self.util.len() {
            if c != own && self.util[c] > current && (!need_entry_consent || self.dislikes[c] == 0) {
                return Some(Deviation {
                    agent: a,
                    target: Target::Join(c),
                });
            }
        }
        if self.sizes[own] > 1 && current < 0.0 {
            return Some(Deviation {
                agent: a,
                target: Target::NewSingleton,
            });
        }
        None
    }
}

fn consent_rules(concept: Concept) -> Option<(bool, bool)> {
    match concept {
        Concept::Nash => Some((false, false)),
        Concept::Individual => Some((true, false)),
        Concept::ContractualNash => Some((false, true)),
        Concept::ContractualIndividual => Some((true, true)),
        _ => None,
    }
}

fn validate_labels(game: &HedonicGame, labels: &[usize], blocks: usize) -> Result<()> {
    if labels.len() != game.n() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} agents, game has {}",
            labels.len(),
            game.n()
        )));
    }
    let mut used = vec![false; blocks];
    for &l in labels {
        *used
            .get_mut(l)
            .ok_or_else(|| Error::InvalidPartition(format!("label {l} out of range")))? = true;
    }
    if used.iter().any(|u| !u) {
        return Err(Error::InvalidPartition("empty coalition label".into()));
    }
    Ok(())
}

/// Decides `concept` for the partition given as block labels in `0..blocks`.
/// Every label in range must be used.
pub fn check_labels(game: &HedonicGame, labels: &[usize], blocks: usize, concept: Concept) -> Result<Verdict> {
    validate_labels(game, labels, blocks)?;
    Ok(check_labels_unchecked(game, labels, blocks, concept))
}

pub(crate) fn check_labels_unchecked(game: &HedonicGame, labels: &[usize], blocks: usize, concept: Concept) -> Verdict {
    let mut view = AgentView::new(game, labels, blocks);
    let n = labels.len();
    if let Some((entry, exit)) = consent_rules(concept) {
        for a in 0..n {
            view.load_utilities(a);
            if entry || exit {
                view.load_attitudes(a);
            }
            if let Some(d) = view.find_deviation(a, entry, exit) {
                return Verdict::unstable(Witness::Deviation(d));
            }
        }
        return Verdict::stable();
    }
    for (a, &own) in labels.iter().enumerate() {
        match concept {
            Concept::IndividuallyRational => {
                view.load_utilities(a);
                if view.util[own] < 0.0 {
                    return Verdict::unstable(Witness::Blocking {
                        agent: a,
                        coalition: own,
                    });
                }
            }
            Concept::EnterDenied => {
                view.load_attitudes(a);
                if let Some(c) = (0..blocks).find(|&c| c != own && view.dislikes[c] == 0) {
                    return Verdict::unstable(Witness::Blocking { agent: a, coalition: c });
                }
            }
            Concept::ExitDenied => {
                view.load_attitudes(a);
                if view.likes[own] == 0 {
                    return Verdict::unstable(Witness::Blocking {
                        agent: a,
                        coalition: own,
                    });
                }
            }
            _ => unreachable!(),
        }
    }
    Verdict::stable()
}

pub fn check(game: &HedonicGame, partition: &Partition, concept: Concept) -> Result<Verdict> {
    check_labels(game, partition.assignment(), partition.len(), concept)
}

/// Outcome of every concept for one (game, partition) pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptFlags([bool; 7]);

impl ConceptFlags {
    pub fn get(&self, concept: Concept) -> bool {
        self.0[concept.index()]
    }

    pub fn set(&mut self, concept: Concept, value: bool) {
        self.0[concept.index()] = value;
    }

    pub fn to_map(&self) -> BTreeMap<Concept, bool> {
        Concept::ALL.iter().map(|&c| (c, self.get(c))).collect()
    }
}

/// All seven concepts in a single pass over the agents.
pub(crate) fn evaluate_labels(game: &HedonicGame, labels: &[usize], blocks: usize) -> ConceptFlags {
    let mut view = AgentView::new(game, labels, blocks);
    let mut flags = ConceptFlags([true; 7]);
    for (a, &own) in labels.iter().enumerate() {
        view.load_utilities(a);
        view.load_attitudes(a);
        for concept in [
            Concept::Nash,
            Concept::Individual,
            Concept::ContractualNash,
            Concept::ContractualIndividual,
        ] {
            if flags.get(concept) {
                let (entry, exit) = consent_rules(concept).unwrap();
                if view.find_deviation(a, entry, exit).is_some() {
                    flags.set(concept, false);
                }
            }
        }
        if view.util[own] < 0.0 {
            flags.set(Concept::IndividuallyRational, false);
        }
        if (0..blocks).any(|c| c != own && view.dislikes[c] == 0) {
            flags.set(Concept::EnterDenied, false);
        }
        if view.likes[own] == 0 {
            flags.set(Concept::ExitDenied, false);
        }
    }
    flags
}

pub fn evaluate_all(game: &HedonicGame, partition: &Partition) -> Result<ConceptFlags> {
    validate_labels(game, partition.assignment(), partition.len())?;
    Ok(evaluate_labels(game, partition.assignment(), partition.len()))
}

/// The implications that must hold between concept outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Implication {
    NashImpliesIndividual,
    NashImpliesContractualNash,
    IndividualImpliesRational,
    IndividualImpliesContractualIndividual,
    ContractualNashImpliesContractualIndividual,
    ExitDeniedImpliesContractualNash,
    EnterDeniedAndRationalImplyIndividual,
}

impl Implication {
    pub const ALL: [Implication; 7] = [
        Implication::NashImpliesIndividual,
        Implication::NashImpliesContractualNash,
        Implication::IndividualImpliesRational,
        Implication::IndividualImpliesContractualIndividual,
        Implication::ContractualNashImpliesContractualIndividual,
        Implication::ExitDeniedImpliesContractualNash,
        Implication::EnterDeniedAndRationalImplyIndividual,
    ];

    fn premises(self) -> &'static [Concept] {
        use Concept::*;
        match self {
            Implication::NashImpliesIndividual | Implication::NashImpliesContractualNash => &[Nash],
            Implication::IndividualImpliesRational | Implication::IndividualImpliesContractualIndividual => {
                &[Individual]
            }
            Implication::ContractualNashImpliesContractualIndividual => &[ContractualNash],
            Implication::ExitDeniedImpliesContractualNash => &[ExitDenied],
            Implication::EnterDeniedAndRationalImplyIndividual => &[EnterDenied, IndividuallyRational],
        }
    }

    fn conclusion(self) -> Concept {
        use Concept::*;
        match self {
            Implication::NashImpliesIndividual => Individual,
            Implication::NashImpliesContractualNash => ContractualNash,
            Implication::IndividualImpliesRational => IndividuallyRational,
            Implication::IndividualImpliesContractualIndividual => ContractualIndividual,
            Implication::ContractualNashImpliesContractualIndividual => ContractualIndividual,
            Implication::ExitDeniedImpliesContractualNash => ContractualNash,
            Implication::EnterDeniedAndRationalImplyIndividual => Individual,
        }
    }
}

impl fmt::Display for Implication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let premises: Vec<&str> = self.premises().iter().map(|c| c.name()).collect();
        write!(f, "{} => {}", premises.join(" & "), self.conclusion())
    }
}

/// Violated implications among the seven concept outcomes; empty means consistent.
pub fn implied_concepts(results: &BTreeMap<Concept, bool>) -> Result<Vec<Implication>> {
    let get = |c: Concept| results.get(&c).copied().ok_or(Error::MissingConcept(c));
    for c in Concept::ALL {
        get(c)?;
    }
    let mut violated = Vec::new();
    for imp in Implication::ALL {
        let holds = imp.premises().iter().all(|&c| results[&c]);
        if holds && !results[&imp.conclusion()] {
            violated.push(imp);
        }
    }
    Ok(violated)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_and_chase() -> HedonicGame {
        HedonicGame::from_rows(vec![vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn run_and_chase_has_no_nash_partition() {
        let g = run_and_chase();
        let singles = Partition::singletons(2).unwrap();
        let grand = Partition::grand(2).unwrap();
        let v = check(&g, &singles, Concept::Nash).unwrap();
        assert_eq!(
            v.witness,
            Some(Witness::Deviation(Deviation {
                agent: 1,
                target: Target::Join(0)
            }))
        );
        let v = check(&g, &grand, Concept::Nash).unwrap();
        assert_eq!(
            v.witness,
            Some(Witness::Deviation(Deviation {
                agent: 0,
                target: Target::NewSingleton
            }))
        );
    }

    #[test]
    fn singleton_partition_is_rational_and_never_exit_denied() {
        let g = run_and_chase();
        let singles = Partition::singletons(2).unwrap();
        assert!(check(&g, &singles, Concept::IndividuallyRational).unwrap().stable);
        assert!(!check(&g, &singles, Concept::ExitDenied).unwrap().stable);
    }

    #[test]
    fn positive_grand_coalition_is_nash() {
        let g = HedonicGame::from_fn(4, |a, b| 0.1 + (a + b) as f64 / 10.0).unwrap();
        let grand = Partition::grand(4).unwrap();
        for c in Concept::ALL {
            assert!(check(&g, &grand, c).unwrap().stable, "{c}");
        }
    }

    #[test]
    fn indifference_blocks_no_consent() {
        // Agent 1 is indifferent to agent 0; 0 gains by joining {1, 2}.
        let g = HedonicGame::from_rows(vec![vec![0.0, 1.0, 1.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let p = Partition::new(3, vec![vec![0], vec![1, 2]]).unwrap();
        let v = check(&g, &p, Concept::Individual).unwrap();
        assert_eq!(
            v.witness,
            Some(Witness::Deviation(Deviation {
                agent: 0,
                target: Target::Join(1)
            }))
        );
        // Nobody blocks entry for agent 0 either.
        assert_eq!(
            check(&g, &p, Concept::EnterDenied).unwrap().witness,
            Some(Witness::Blocking { agent: 0, coalition: 1 })
        );
    }

    #[test]
    fn contractual_consent_blocks_leaving() {
        // 0 would rather be alone but 1 wants it to stay.
        let g = HedonicGame::from_rows(vec![vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let grand = Partition::grand(2).unwrap();
        assert!(!check(&g, &grand, Concept::Individual).unwrap().stable);
        assert!(check(&g, &grand, Concept::ContractualNash).unwrap().stable);
        assert!(check(&g, &grand, Concept::ContractualIndividual).unwrap().stable);
    }

    #[test]
    fn concept_names_round_trip() {
        for c in Concept::ALL {
            assert_eq!(c.name().parse::<Concept>().unwrap(), c);
        }
        assert_eq!("CIS".parse::<Concept>().unwrap(), Concept::ContractualIndividual);
        assert!("core".parse::<Concept>().is_err());
    }

    #[test]
    fn implication_examples() {
        let mut m: BTreeMap<Concept, bool> = Concept::ALL.iter().map(|&c| (c, false)).collect();
        assert!(implied_concepts(&m).unwrap().is_empty());
        m.insert(Concept::Nash, true);
        assert!(implied_concepts(&m)
            .unwrap()
            .contains(&Implication::NashImpliesIndividual));

        let mut m: BTreeMap<Concept, bool> = Concept::ALL.iter().map(|&c| (c, false)).collect();
        m.insert(Concept::ExitDenied, true);
        m.insert(Concept::ContractualNash, true);
        m.insert(Concept::ContractualIndividual, true);
        assert!(implied_concepts(&m).unwrap().is_empty());

        m.remove(&Concept::Nash);
        assert!(matches!(
            implied_concepts(&m),
            Err(Error::MissingConcept(Concept::Nash))
        ));
    }

    #[test]
    fn label_validation() {
        let g = run_and_chase();
        assert!(check_labels(&g, &[0, 2], 2, Concept::Nash).is_err());
        assert!(check_labels(&g, &[0, 0], 2, Concept::Nash).is_err());
        assert!(check_labels(&g, &[0], 1, Concept::Nash).is_err());
    }
}
