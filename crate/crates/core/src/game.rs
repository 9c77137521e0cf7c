//! Additively separable hedonic games and coalition structures.
//!
//! Agents are dense indices `0..n`. A game stores the full `n × n` utility
//! table row-major, where entry `(a, b)` is the value agent `a` assigns to
//! sharing a coalition with `b`. The diagonal is kept at zero and never
//! contributes to a sum.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Agent = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct HedonicGame {
    n: usize,
    utilities: Vec<f64>,
}

impl HedonicGame {
    /// Builds a game from a row-major table of `n * n` finite values with a zero diagonal.
    pub fn new(n: usize, utilities: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGame("a game needs at least one agent".into()));
        }
        if utilities.len() != n * n {
            return Err(Error::InvalidGame(format!(
                "expected {} utility entries for n = {n}, got {}",
                n * n,
                utilities.len()
            )));
        }
        if let Some(i) = utilities.iter().position(|u| !u.is_finite()) {
            return Err(Error::InvalidGame(format!(
                "utility ({}, {}) is not finite",
                i / n,
                i % n
            )));
        }
        if let Some(a) = (0..n).find(|&a| utilities[a * n + a] != 0.0) {
            return Err(Error::InvalidGame(format!("self-utility of agent {a} must be 0")));
        }
        Ok(HedonicGame { n, utilities })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if let Some((a, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::InvalidGame(format!(
                "row {a} has {} entries, expected {n}",
                row.len()
            )));
        }
        Self::new(n, rows.into_iter().flatten().collect())
    }

    /// Fills the off-diagonal entries from `f(a, b)`; the diagonal is forced to zero.
    ///
    /// Entries are requested in row-major order, which the sampler relies on.
    pub fn from_fn(n: usize, mut f: impl FnMut(Agent, Agent) -> f64) -> Result<Self> {
        let mut utilities = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    utilities[a * n + b] = f(a, b);
                }
            }
        }
        Self::new(n, utilities)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `u_a(b)`. Panics if either id is out of range.
    #[inline]
    pub fn utility(&self, a: Agent, b: Agent) -> f64 {
        self.utilities[a * self.n + b]
    }

    #[inline]
    pub fn row(&self, a: Agent) -> &[f64] {
        &self.utilities[a * self.n..(a + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.utilities.chunks_exact(self.n)
    }

    pub(crate) fn check_agent(&self, agent: Agent) -> Result<()> {
        if agent < self.n {
            Ok(())
        } else {
            Err(Error::InvalidAgent { agent, n: self.n })
        }
    }

    fn check_all(&self, agents: &[Agent]) -> Result<()> {
        agents.iter().try_for_each(|&b| self.check_agent(b))
    }

    /// `u_agent(C) = Σ_{b ∈ C \ {agent}} u_agent(b)`; the agent need not belong to `C`.
    pub fn coalition_utility(&self, agent: Agent, coalition: &[Agent]) -> Result<f64> {
        self.check_agent(agent)?;
        self.check_all(coalition)?;
        Ok(self.sum_utility(agent, coalition))
    }

    /// Unchecked form of [`coalition_utility`](Self::coalition_utility).
    #[inline]
    pub(crate) fn sum_utility(&self, agent: Agent, coalition: &[Agent]) -> f64 {
        let row = self.row(agent);
        coalition.iter().filter(|&&b| b != agent).map(|&b| row[b]).sum()
    }

    /// Members of `coalition` (other than `agent`) that strictly want `agent` inside.
    pub fn favor_in(&self, coalition: &[Agent], agent: Agent) -> Result<Vec<Agent>> {
        self.favor_set(coalition, agent, |u| u > 0.0)
    }

    /// Members of `coalition` (other than `agent`) that strictly want `agent` outside.
    pub fn favor_out(&self, coalition: &[Agent], agent: Agent) -> Result<Vec<Agent>> {
        self.favor_set(coalition, agent, |u| u < 0.0)
    }

    fn favor_set(&self, coalition: &[Agent], agent: Agent, keep: impl Fn(f64) -> bool) -> Result<Vec<Agent>> {
        self.check_agent(agent)?;
        self.check_all(coalition)?;
        Ok(coalition
            .iter()
            .copied()
            .filter(|&b| b != agent && keep(self.utility(b, agent)))
            .collect())
    }
}

/// Disjoint nonempty coalitions over a subset of the agents (the carrier).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialPartition {
    coalitions: Vec<Vec<Agent>>,
}

impl PartialPartition {
    pub fn empty() -> Self {
        PartialPartition { coalitions: Vec::new() }
    }

    /// Validates disjointness and nonemptiness against an `n`-agent universe.
    /// Members are sorted within each coalition; coalition order is kept.
    pub fn new(n: usize, mut coalitions: Vec<Vec<Agent>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for (i, c) in coalitions.iter_mut().enumerate() {
            if c.is_empty() {
                return Err(Error::InvalidPartition(format!("coalition {i} is empty")));
            }
            c.sort_unstable();
            for &a in c.iter() {
                if a >= n {
                    return Err(Error::InvalidAgent { agent: a, n });
                }
                if std::mem::replace(&mut seen[a], true) {
                    return Err(Error::InvalidPartition(format!(
                        "agent {a} appears in more than one coalition"
                    )));
                }
            }
        }
        Ok(PartialPartition { coalitions })
    }

    pub fn coalitions(&self) -> &[Vec<Agent>] {
        &self.coalitions
    }

    pub fn into_coalitions(self) -> Vec<Vec<Agent>> {
        self.coalitions
    }

    pub fn len(&self) -> usize {
        self.coalitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coalitions.is_empty()
    }

    /// `N(π')`, ascending.
    pub fn carrier(&self) -> Vec<Agent> {
        let mut all: Vec<Agent> = self.coalitions.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }
}

/// A coalition structure covering every agent exactly once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    coalitions: Vec<Vec<Agent>>,
    assignment: Vec<usize>,
}

impl Partition {
    pub fn new(n: usize, coalitions: Vec<Vec<Agent>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPartition("no agents to partition".into()));
        }
        let coalitions = PartialPartition::new(n, coalitions)?.into_coalitions();
        let mut assignment = vec![usize::MAX; n];
        for (i, c) in coalitions.iter().enumerate() {
            for &a in c {
                assignment[a] = i;
            }
        }
        if let Some(a) = assignment.iter().position(|&c| c == usize::MAX) {
            return Err(Error::InvalidPartition(format!("agent {a} is not in any coalition")));
        }
        Ok(Partition { coalitions, assignment })
    }

    /// Builds a partition from per-agent block labels. Labels need not be
    /// contiguous; coalitions are ordered by first appearance.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let mut index = std::collections::HashMap::new();
        let mut coalitions: Vec<Vec<Agent>> = Vec::new();
        for (a, &l) in labels.iter().enumerate() {
            let next = coalitions.len();
            let i = *index.entry(l).or_insert(next);
            if i == coalitions.len() {
                coalitions.push(Vec::new());
            }
            coalitions[i].push(a);
        }
        Partition::new(labels.len(), coalitions)
    }

    pub fn singletons(n: usize) -> Result<Self> {
        Partition::new(n, (0..n).map(|a| vec![a]).collect())
    }

    pub fn grand(n: usize) -> Result<Self> {
        Partition::new(n, vec![(0..n).collect()])
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn coalitions(&self) -> &[Vec<Agent>] {
        &self.coalitions
    }

    pub fn into_coalitions(self) -> Vec<Vec<Agent>> {
        self.coalitions
    }

    pub fn len(&self) -> usize {
        self.coalitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coalitions.is_empty()
    }

    /// Index of `π(agent)`.
    pub fn coalition_of(&self, agent: Agent) -> usize {
        self.assignment[agent]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn has_singleton(&self) -> bool {
        self.coalitions.iter().any(|c| c.len() == 1)
    }

    /// Coalition sizes mapped to how many coalitions have that size.
    pub fn size_histogram(&self) -> std::collections::BTreeMap<usize, usize> {
        let mut h = std::collections::BTreeMap::new();
        for c in &self.coalitions {
            *h.entry(c.len()).or_insert(0) += 1;
        }
        h
    }

    /// The partition after `deviation`; the vacated coalition is dropped if it empties.
    pub fn apply(&self, deviation: Deviation) -> Result<Partition> {
        let mut coalitions = self.coalitions.clone();
        let from = self.coalition_of(deviation.agent);
        coalitions[from].retain(|&b| b != deviation.agent);
        match deviation.target {
            Target::Join(c) => coalitions
                .get_mut(c)
                .ok_or_else(|| Error::input(format!("no coalition {c}")))?
                .push(deviation.agent),
            Target::NewSingleton => coalitions.push(vec![deviation.agent]),
        }
        coalitions.retain(|c| !c.is_empty());
        Partition::new(self.n(), coalitions)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    /// Existing coalition index, never the agent's own.
    Join(usize),
    NewSingleton,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Deviation {
    pub agent: Agent,
    pub target: Target,
}

impl fmt::Display for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.target {
            Target::Join(c) => write!(f, "agent {} joins coalition {c}", self.agent),
            Target::NewSingleton => write!(f, "agent {} leaves to a new singleton", self.agent),
        }
    }
}

/// Every single-agent deviation available in `partition`: joins to each other
/// coalition in index order, then leaving alone unless already a singleton.
pub fn enumerate_deviations(game: &HedonicGame, partition: &Partition) -> Vec<Deviation> {
    debug_assert_eq!(game.n(), partition.n());
    let mut out = Vec::new();
    for agent in 0..partition.n() {
        let own = partition.coalition_of(agent);
        out.extend((0..partition.len()).filter(|&c| c != own).map(|c| Deviation {
            agent,
            target: Target::Join(c),
        }));
        if partition.coalitions()[own].len() > 1 {
            out.push(Deviation {
                agent,
                target: Target::NewSingleton,
            });
        }
    }
    out
}
