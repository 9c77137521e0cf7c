//! Three-stage clustering for random hedonic games.
//!
//! Stage 1 splits the agents into `g` groups and greedily carves each group
//! into cliques of size `s` in the "mutually likes at least τ" graph. Stage 2
//! merges one clique per group into a coalition of size `g·s`, admitting a
//! clique only while every pairwise utility sum stays above a compatibility
//! floor. Stage 3 places every leftover agent into a distinct merged
//! coalition it likes and that did not inspect it in Stage 2.
//!
//! Every utility the procedure looks at is written to a [`RevelationLedger`],
//! which lets tests confirm which entries were conditioned and how.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Agent, HedonicGame, PartialPartition, Partition};

/// Maps the number of agents to a clique size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SizeRule {
    /// `⌈scale · log_base(n)⌉`, at least 1.
    Log {
        base: f64,
        scale: f64,
    },
    Fixed(usize),
}

impl SizeRule {
    /// `⌈log₁₆(n) / 2⌉`.
    pub const DEFAULT_LOG: SizeRule = SizeRule::Log { base: 16.0, scale: 0.5 };

    pub fn eval(&self, n: usize) -> usize {
        match *self {
            SizeRule::Fixed(s) => s.max(1),
            SizeRule::Log { base, scale } => {
                if n <= 1 {
                    return 1;
                }
                // The slack keeps exact powers of the base from rounding up.
                let x = scale * (n as f64).ln() / base.ln();
                ((x - 1e-9).ceil() as usize).max(1)
            }
        }
    }
}

/// Maps the number of agents to the per-group Stage-1 remainder allowance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapRule {
    /// `n / log₁₆²(n)`; unbounded for `n ≤ 1`.
    LogSquared,
    Fixed(f64),
}

impl CapRule {
    pub fn eval(&self, n: usize) -> f64 {
        match *self {
            CapRule::Fixed(c) => c,
            CapRule::LogSquared => {
                let l = (n as f64).ln() / 16f64.ln();
                if l > 0.0 {
                    n as f64 / (l * l)
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Merge-failure exponent implied by the Hoeffding estimate for one utility sum.
pub fn default_merge_rate() -> f64 {
    1.0 / (25_600.0 * 16f64.ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    /// Number of agent groups `g`.
    pub groups: usize,
    pub clique_size: SizeRule,
    /// Clique edge threshold `τ`: both directed utilities must reach it.
    pub tau: f64,
    /// Compatibility constant `c`; round `k` admits sums down to `-(k-1)·c·s`.
    pub compat: f64,
    pub remainder_cap: CapRule,
    /// Exponent `r` of the per-attempt merge-failure bound; only enters the Stage-2 remainder allowance.
    pub merge_rate: f64,
}

impl AlgoConfig {
    pub fn asymptotic() -> Self {
        AlgoConfig {
            groups: 20,
            clique_size: SizeRule::DEFAULT_LOG,
            tau: 0.5,
            compat: 1.0 / 80.0,
            remainder_cap: CapRule::LogSquared,
            merge_rate: default_merge_rate(),
        }
    }

    pub fn with_groups(mut self, groups: usize) -> Self {
        self.groups = groups;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups < 2 {
            return Err(Error::input("at least two groups are required"));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::input(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if !(self.compat > 0.0 && self.compat.is_finite()) {
            return Err(Error::input(format!("compat must be positive, got {}", self.compat)));
        }
        if !(self.merge_rate > 0.0 && self.merge_rate.is_finite()) {
            return Err(Error::input("merge rate must be positive"));
        }
        if let SizeRule::Fixed(0) = self.clique_size {
            return Err(Error::input("clique size must be at least 1"));
        }
        if let SizeRule::Log { base, scale } = self.clique_size {
            if !(base > 1.0 && scale > 0.0) {
                return Err(Error::input("log size rule needs base > 1 and scale > 0"));
            }
        }
        Ok(())
    }

    pub fn clique_size(&self, n: usize) -> usize {
        self.clique_size.eval(n)
    }

    pub fn stage1_cap(&self, n: usize) -> f64 {
        self.remainder_cap.eval(n)
    }

    /// `g·cap₁(n) + (4g / r)·s`.
    pub fn stage2_cap(&self, n: usize) -> f64 {
        let g = self.groups as f64;
        g * self.stage1_cap(n) + 4.0 * g / self.merge_rate * self.clique_size(n) as f64
    }
}

impl Default for AlgoConfig {
    fn default() -> Self {
        Self::asymptotic()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    One = 1,
    Two = 2,
    Three = 3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observation {
    /// Stage 1 learned `u < τ`.
    BelowThreshold,
    /// Stage 1 learned `u ≥ τ`.
    AtLeastThreshold,
    /// The value itself entered a sum.
    Raw,
}

/// Ordered entry: `source`'s utility for `target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Revelation {
    pub stage: Stage,
    pub source: Agent,
    pub target: Agent,
    pub observed: Observation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeAttempt {
    /// Round `k ≥ 2` within the merged coalition under construction.
    pub round: usize,
    /// `(agent, coalition)` utility sums evaluated.
    pub sum_checks: usize,
    pub compatible: bool,
}

/// Which utility entries the algorithm has examined, and at which stage.
///
/// An ordered pair is recorded at most once: the first stage that looks at
/// it owns it, and later looks are not re-recorded.
#[derive(Clone, Debug)]
pub struct RevelationLedger {
    n: usize,
    cells: Vec<u8>,
    len: usize,
    merge_attempts: Vec<MergeAttempt>,
}

impl RevelationLedger {
    pub fn new(n: usize) -> Self {
        RevelationLedger {
            n,
            cells: vec![0; n * n],
            len: 0,
            merge_attempts: Vec::new(),
        }
    }

    fn encode(stage: Stage, observed: Observation) -> u8 {
        let class = match observed {
            Observation::BelowThreshold => 0,
            Observation::AtLeastThreshold => 1,
            Observation::Raw => 2,
        };
        ((stage as u8) << 2) | class
    }

    fn decode(cell: u8) -> Option<(Stage, Observation)> {
        let stage = match cell >> 2 {
            1 => Stage::One,
            2 => Stage::Two,
            3 => Stage::Three,
            _ => return None,
        };
        let observed = match cell & 3 {
            0 => Observation::BelowThreshold,
            1 => Observation::AtLeastThreshold,
            _ => Observation::Raw,
        };
        Some((stage, observed))
    }

    /// Returns `false` if the pair was already revealed.
    pub fn record(&mut self, r: Revelation) -> bool {
        let cell = &mut self.cells[r.source * self.n + r.target];
        if *cell != 0 {
            return false;
        }
        *cell = Self::encode(r.stage, r.observed);
        self.len += 1;
        true
    }

    pub fn get(&self, source: Agent, target: Agent) -> Option<(Stage, Observation)> {
        Self::decode(self.cells[source * self.n + target])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// All entries ordered by `(source, target)`.
    pub fn entries(&self) -> impl Iterator<Item = Revelation> + '_ {
        self.cells.iter().enumerate().filter_map(move |(i, &c)| {
            Self::decode(c).map(|(stage, observed)| Revelation {
                stage,
                source: i / self.n,
                target: i % self.n,
                observed,
            })
        })
    }

    pub fn count_stage(&self, stage: Stage) -> usize {
        self.entries().filter(|r| r.stage == stage).count()
    }

    /// Whether any entry of `stage` links `agent` and a member of `coalition`, in either direction.
    pub fn touches(&self, agent: Agent, coalition: &[Agent], stage: Stage) -> bool {
        coalition.iter().any(|&b| {
            matches!(self.get(agent, b), Some((s, _)) if s == stage)
                || matches!(self.get(b, agent), Some((s, _)) if s == stage)
        })
    }

    pub fn merge_attempts(&self) -> &[MergeAttempt] {
        &self.merge_attempts
    }
}

/// Round-robin split of the agents into `g` groups.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAssignment {
    pub group_of: Vec<usize>,
    pub groups: Vec<Vec<Agent>>,
}

impl GroupAssignment {
    pub fn round_robin(n: usize, g: usize) -> Self {
        let group_of: Vec<usize> = (0..n).map(|a| a % g).collect();
        let mut groups = vec![Vec::new(); g];
        for a in 0..n {
            groups[a % g].push(a);
        }
        GroupAssignment { group_of, groups }
    }
}

fn greedy_cliques_logged(
    game: &HedonicGame,
    carrier: &[Agent],
    size: usize,
    tau: f64,
    log: &mut Vec<Revelation>,
) -> (Vec<Vec<Agent>>, Vec<Agent>) {
    let mut remaining = carrier.to_vec();
    remaining.sort_unstable();
    remaining.dedup();
    let mut cliques = Vec::new();
    let mut observe = |source: Agent, target: Agent| {
        let ok = game.utility(source, target) >= tau;
        log.push(Revelation {
            stage: Stage::One,
            source,
            target,
            observed: if ok {
                Observation::AtLeastThreshold
            } else {
                Observation::BelowThreshold
            },
        });
        ok
    };
    while let Some(&seed) = remaining.first() {
        let mut clique = vec![seed];
        for &w in &remaining[1..] {
            if clique.len() >= size {
                break;
            }
            // Member by member, stopping at the first sub-threshold value.
            let admitted = clique.iter().all(|&z| observe(w, z) && observe(z, w));
            if admitted {
                clique.push(w);
            }
        }
        if clique.len() < size {
            break;
        }
        remaining.retain(|a| !clique.contains(a));
        cliques.push(clique);
    }
    (cliques, remaining)
}

/// Greedy clique formation on the subgame induced by `carrier`.
///
/// Seeds are taken in ascending id order and candidates scanned in ascending
/// id order. Returns the cliques in creation order (each of size exactly
/// `size`) and the agents left over when a seed could not be grown to `size`.
pub fn greedy_cliques(
    game: &HedonicGame,
    carrier: &[Agent],
    size: usize,
    tau: f64,
    ledger: &mut RevelationLedger,
) -> Result<(PartialPartition, Vec<Agent>)> {
    for &a in carrier {
        game.check_agent(a)?;
    }
    let mut log = Vec::new();
    let (cliques, remainder) = greedy_cliques_logged(game, carrier, size.max(1), tau, &mut log);
    for r in log {
        ledger.record(r);
    }
    Ok((PartialPartition::new(game.n(), cliques)?, remainder))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompatCheck {
    pub compatible: bool,
    pub sum_checks: usize,
}

/// Compatibility of `candidate` with the cliques chosen so far in this round.
///
/// Evaluates every sum in the pair set: `u_a(candidate)` for each earlier
/// member `a`, and `u_b(C_j)` for each candidate member `b` and earlier clique
/// `C_j`. The floors are `-c·s` and `-(k-1)·c·s` where `k = chosen.len() + 1`.
pub fn is_compatible(
    game: &HedonicGame,
    candidate: &[Agent],
    chosen: &[&[Agent]],
    config: &AlgoConfig,
    ledger: &mut RevelationLedger,
) -> CompatCheck {
    let unit = config.compat * config.clique_size(game.n()) as f64;
    compat_with_unit(game, candidate, chosen, unit, ledger)
}

fn compat_with_unit(
    game: &HedonicGame,
    candidate: &[Agent],
    chosen: &[&[Agent]],
    unit: f64,
    ledger: &mut RevelationLedger,
) -> CompatCheck {
    let mut raw = |source: Agent, target: Agent| {
        ledger.record(Revelation {
            stage: Stage::Two,
            source,
            target,
            observed: Observation::Raw,
        });
        game.utility(source, target)
    };
    let mut compatible = true;
    let mut sum_checks = 0;
    for &a in chosen.iter().copied().flatten() {
        let u: f64 = candidate.iter().map(|&b| raw(a, b)).sum();
        sum_checks += 1;
        compatible &= u >= -unit;
    }
    let floor = -((chosen.len()) as f64) * unit;
    for &b in candidate {
        let mut total = 0.0;
        for clique in chosen {
            total += clique.iter().map(|&a| raw(b, a)).sum::<f64>();
            sum_checks += 1;
        }
        compatible &= total >= floor;
    }
    CompatCheck { compatible, sum_checks }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    pub merged: PartialPartition,
    /// For each merged coalition, the index of the clique taken from each group's list.
    pub sources: Vec<Vec<usize>>,
    pub remainder: Vec<Agent>,
}

/// Greedy merging of one clique per partition into larger coalitions.
///
/// Each round takes the first remaining clique of the first partition, then
/// for every later partition the first remaining clique compatible with the
/// union so far. The first time some partition offers no compatible clique,
/// merging stops and every unconsumed clique's agents form the remainder.
pub fn greedy_cluster(
    game: &HedonicGame,
    partitions: &[PartialPartition],
    config: &AlgoConfig,
    ledger: &mut RevelationLedger,
) -> Result<Clustering> {
    let mut seen = vec![false; game.n()];
    for a in partitions.iter().flat_map(|p| p.carrier()) {
        game.check_agent(a)?;
        if std::mem::replace(&mut seen[a], true) {
            return Err(Error::InvalidPartition(format!(
                "agent {a} appears in more than one clique partition"
            )));
        }
    }
    let unit = config.compat * config.clique_size(game.n()) as f64;
    let lists: Vec<&[Vec<Agent>]> = partitions.iter().map(|p| p.coalitions()).collect();
    let mut pools: Vec<Vec<usize>> = lists.iter().map(|l| (0..l.len()).collect()).collect();
    let mut merged = Vec::new();
    let mut sources = Vec::new();

    'rounds: while !pools.is_empty() && !pools[0].is_empty() {
        let mut picks: Vec<usize> = Vec::with_capacity(pools.len());
        let mut chosen: Vec<&[Agent]> = Vec::with_capacity(pools.len());
        for (k, pool) in pools.iter().enumerate() {
            let pick = if k == 0 {
                Some(0)
            } else {
                pool.iter().position(|&ci| {
                    let check = compat_with_unit(game, &lists[k][ci], &chosen, unit, ledger);
                    ledger.merge_attempts.push(MergeAttempt {
                        round: k + 1,
                        sum_checks: check.sum_checks,
                        compatible: check.compatible,
                    });
                    check.compatible
                })
            };
            match pick {
                Some(pos) => {
                    picks.push(pos);
                    chosen.push(&lists[k][pool[pos]]);
                }
                None => break 'rounds,
            }
        }
        let mut coalition: Vec<Agent> = chosen.iter().copied().flatten().copied().collect();
        coalition.sort_unstable();
        merged.push(coalition);
        sources.push(picks.iter().enumerate().map(|(k, &pos)| pools[k].remove(pos)).collect());
    }

    let lists = &lists;
    let mut remainder: Vec<Agent> = pools
        .iter()
        .enumerate()
        .flat_map(|(k, pool)| pool.iter().flat_map(move |&ci| lists[k][ci].iter().copied()))
        .collect();
    remainder.sort_unstable();
    Ok(Clustering {
        merged: PartialPartition::new(game.n(), merged)?,
        sources,
        remainder,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub agent: Agent,
    /// Index of the merged coalition the agent joined.
    pub coalition: usize,
    /// Positive utility and no Stage-2 contact with the coalition.
    pub compliant: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Completion {
    pub partition: Partition,
    pub success: bool,
    pub placements: Vec<Placement>,
}

/// Stage 3: every remainder agent joins a distinct merged coalition.
///
/// Among coalitions not yet used, the agent takes the one maximising its
/// utility subject to positive utility and no Stage-2 contact. If none
/// qualifies it takes the best unused coalition and the stage fails. If more
/// agents remain than coalitions, the pool is reopened (the stage fails); if
/// there are no merged coalitions at all, the leftovers stay singletons.
pub fn complete_partition(
    game: &HedonicGame,
    merged: &PartialPartition,
    remainder: &[Agent],
    ledger: &mut RevelationLedger,
) -> Result<Completion> {
    let mut remainder = remainder.to_vec();
    remainder.sort_unstable();
    let mut coalitions: Vec<Vec<Agent>> = merged.coalitions().to_vec();

    if coalitions.is_empty() {
        let partition = Partition::new(game.n(), remainder.iter().map(|&a| vec![a]).collect())?;
        return Ok(Completion {
            partition,
            success: remainder.is_empty(),
            placements: Vec::new(),
        });
    }

    let mut success = true;
    let mut unused: Vec<bool> = vec![true; coalitions.len()];
    let mut placements = Vec::with_capacity(remainder.len());
    for &a in &remainder {
        game.check_agent(a)?;
        if !unused.iter().any(|&u| u) {
            unused.fill(true);
            success = false;
        }
        let mut best_any: Option<(usize, f64)> = None;
        let mut best_ok: Option<(usize, f64)> = None;
        for (ci, c) in coalitions.iter().enumerate() {
            if !unused[ci] {
                continue;
            }
            let u = game.sum_utility(a, c);
            for &b in c {
                ledger.record(Revelation {
                    stage: Stage::Three,
                    source: a,
                    target: b,
                    observed: Observation::Raw,
                });
            }
            if best_any.is_none_or(|(_, v)| u > v) {
                best_any = Some((ci, u));
            }
            if u > 0.0 && !ledger.touches(a, c, Stage::Two) && best_ok.is_none_or(|(_, v)| u > v) {
                best_ok = Some((ci, u));
            }
        }
        let (ci, compliant) = match (best_ok, best_any) {
            (Some((ci, _)), _) => (ci, true),
            (None, Some((ci, _))) => (ci, false),
            (None, None) => unreachable!("pool is never empty here"),
        };
        success &= compliant;
        unused[ci] = false;
        coalitions[ci].push(a);
        placements.push(Placement {
            agent: a,
            coalition: ci,
            compliant,
        });
    }
    Ok(Completion {
        partition: Partition::new(game.n(), coalitions)?,
        success,
        placements,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub n: usize,
    pub groups: usize,
    pub clique_size: usize,
    pub stage1_success: bool,
    pub stage2_success: bool,
    pub stage3_success: bool,
    pub cliques_per_group: Vec<usize>,
    pub stage1_remainders: Vec<usize>,
    pub stage1_remainder_total: usize,
    pub stage2_remainder: usize,
    pub remainder_total: usize,
    pub merged_coalitions: usize,
    pub stage1_cap: f64,
    pub stage2_cap: f64,
    pub coalition_size_histogram: BTreeMap<usize, usize>,
}

/// Intermediate structures of one run, for inspection and structural checks.
#[derive(Clone, Debug, PartialEq)]
pub struct StageTrace {
    pub groups: GroupAssignment,
    pub cliques: Vec<PartialPartition>,
    pub stage1_remainders: Vec<Vec<Agent>>,
    pub clustering: Clustering,
    pub placements: Vec<Placement>,
}

#[derive(Clone, Debug)]
pub struct ThreeStageOutput {
    pub partition: Partition,
    pub report: StageReport,
    pub ledger: RevelationLedger,
    pub trace: StageTrace,
}

/// Runs all three stages. The returned partition always covers every agent.
pub fn run_three_stage(game: &HedonicGame, config: &AlgoConfig) -> Result<ThreeStageOutput> {
    config.validate()?;
    let n = game.n();
    let g = config.groups;
    let s = config.clique_size(n);
    let groups = GroupAssignment::round_robin(n, g);
    let mut ledger = RevelationLedger::new(n);

    type GroupOutcome = (Vec<Vec<Agent>>, Vec<Agent>, Vec<Revelation>);
    let stage1: Vec<GroupOutcome> = groups
        .groups
        .par_iter()
        .map(|members| {
            let mut log = Vec::new();
            let (cliques, rest) = greedy_cliques_logged(game, members, s, config.tau, &mut log);
            (cliques, rest, log)
        })
        .collect();

    let mut cliques = Vec::with_capacity(g);
    let mut stage1_remainders = Vec::with_capacity(g);
    for (cl, rest, log) in stage1 {
        for r in log {
            ledger.record(r);
        }
        cliques.push(PartialPartition::new(n, cl)?);
        stage1_remainders.push(rest);
    }

    let clustering = greedy_cluster(game, &cliques, config, &mut ledger)?;

    let mut remainder: Vec<Agent> = stage1_remainders
        .iter()
        .flatten()
        .chain(&clustering.remainder)
        .copied()
        .collect();
    remainder.sort_unstable();
    let completion = complete_partition(game, &clustering.merged, &remainder, &mut ledger)?;

    let cap1 = config.stage1_cap(n);
    let cap2 = config.stage2_cap(n);
    let stage1_success = cliques
        .iter()
        .zip(&stage1_remainders)
        .all(|(p, rest)| !p.is_empty() && p.coalitions().iter().all(|c| c.len() == s) && rest.len() as f64 <= cap1);
    let stage2_success = stage1_success
        && !clustering.merged.is_empty()
        && clustering.merged.coalitions().iter().all(|c| c.len() == g * s)
        && remainder.len() as f64 <= cap2;

    let stage1_remainder_total = stage1_remainders.iter().map(Vec::len).sum();
    let report = StageReport {
        n,
        groups: g,
        clique_size: s,
        stage1_success,
        stage2_success,
        stage3_success: completion.success && !clustering.merged.is_empty(),
        cliques_per_group: cliques.iter().map(PartialPartition::len).collect(),
        stage1_remainders: stage1_remainders.iter().map(Vec::len).collect(),
        stage1_remainder_total,
        stage2_remainder: clustering.remainder.len(),
        remainder_total: remainder.len(),
        merged_coalitions: clustering.merged.len(),
        stage1_cap: cap1,
        stage2_cap: cap2,
        coalition_size_histogram: completion.partition.size_histogram(),
    };
    Ok(ThreeStageOutput {
        partition: completion.partition,
        report,
        ledger,
        trace: StageTrace {
            groups,
            cliques,
            stage1_remainders,
            clustering,
            placements: completion.placements,
        },
    })
}
