//! Monte Carlo campaigns, exhaustive existence sweeps and result export.
//!
//! Every trial draws its game from a seed derived from `(master_seed, n, trial)`
//! and results are reduced by counting, so output is identical for any
//! thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    all_singletons_ns_prob, check_dominance_lemmas, grand_cns_exit_denied_prob, grand_ns_lower_bound,
    nash_k_composite_bound, nash_partition_bound, DominanceCheck,
};
use crate::error::{Error, Result};
use crate::game::Partition;
use crate::io::{read_text, write_text};
use crate::oracle::{self, for_each_labels};
use crate::sampler::{derive_trial_seed, sample_game, SeedSpec, UtilityDistribution};
use crate::stability::{check_labels_unchecked, evaluate_all, implied_concepts, Concept, ConceptFlags};
use crate::three_stage::{run_three_stage, AlgoConfig, CapRule, SizeRule};

pub const WILSON_Z: f64 = 1.959963984540054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CampaignKind {
    McAlg,
    McGrand,
    OracleExistence,
    BoundsCompare,
    LemmaVerify,
}

impl CampaignKind {
    pub fn name(self) -> &'static str {
        match self {
            CampaignKind::McAlg => "MC_ALG",
            CampaignKind::McGrand => "MC_GRAND",
            CampaignKind::OracleExistence => "ORACLE_EXISTENCE",
            CampaignKind::BoundsCompare => "BOUNDS_COMPARE",
            CampaignKind::LemmaVerify => "LEMMA_VERIFY",
        }
    }
}

impl fmt::Display for CampaignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CampaignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        Ok(match key.as_str() {
            "MC_ALG" => CampaignKind::McAlg,
            "MC_GRAND" => CampaignKind::McGrand,
            "ORACLE_EXISTENCE" => CampaignKind::OracleExistence,
            "BOUNDS_COMPARE" => CampaignKind::BoundsCompare,
            "LEMMA_VERIFY" => CampaignKind::LemmaVerify,
            _ => return Err(Error::input(format!("unknown campaign kind {s:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub kind: CampaignKind,
    /// Agent counts; for LEMMA_VERIFY these are the summand counts `m`.
    pub n_values: Vec<usize>,
    pub trials: u64,
    pub dist: UtilityDistribution,
    pub master_seed: u64,
    pub config: AlgoConfig,
    pub concepts: Vec<Concept>,
    /// Coalition counts for BOUNDS_COMPARE, maxima counts for LEMMA_VERIFY.
    pub k_values: Vec<usize>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub oracle_limit: usize,
}

impl Campaign {
    pub fn new(kind: CampaignKind, n_values: Vec<usize>, trials: u64) -> Self {
        let concepts = match kind {
            CampaignKind::McAlg => vec![
                Concept::IndividuallyRational,
                Concept::EnterDenied,
                Concept::ExitDenied,
                Concept::Individual,
                Concept::ContractualNash,
            ],
            CampaignKind::McGrand => vec![
                Concept::ExitDenied,
                Concept::ContractualNash,
                Concept::IndividuallyRational,
                Concept::Nash,
            ],
            _ => vec![Concept::Nash],
        };
        Campaign {
            kind,
            n_values,
            trials,
            dist: UtilityDistribution::standard(),
            master_seed: 0,
            config: AlgoConfig::asymptotic(),
            concepts,
            k_values: vec![2],
            threads: None,
            oracle_limit: oracle::DEFAULT_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::input("trials must be at least 1"));
        }
        if self.n_values.is_empty() {
            return Err(Error::input("n_values must not be empty"));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input("n_values must be strictly ascending"));
        }
        if self.n_values[0] == 0 {
            return Err(Error::input("n_values must be positive"));
        }
        if self.concepts.is_empty() && matches!(self.kind, CampaignKind::McGrand | CampaignKind::OracleExistence) {
            return Err(Error::input("at least one concept is required"));
        }
        if let Some(0) = self.threads {
            return Err(Error::input("threads must be at least 1"));
        }
        match self.kind {
            CampaignKind::McAlg => self.config.validate()?,
            CampaignKind::OracleExistence => {
                let max = *self.n_values.last().unwrap();
                if max > self.oracle_limit {
                    return Err(Error::LimitExceeded {
                        n: max,
                        limit: self.oracle_limit,
                    });
                }
            }
            CampaignKind::BoundsCompare | CampaignKind::LemmaVerify => {
                if self.k_values.is_empty() || self.k_values.contains(&0) {
                    return Err(Error::input("k_values must be nonempty and positive"));
                }
            }
            CampaignKind::McGrand => {}
        }
        Ok(())
    }

    fn seed_for(&self, n: usize, trial: u64) -> SeedSpec {
        derive_trial_seed(derive_trial_seed(SeedSpec::new(self.master_seed), n as u64), trial)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl FrequencyEstimate {
    /// Point estimate with a Wilson score interval at 95% confidence.
    pub fn new(successes: u64, trials: u64) -> Self {
        assert!(
            trials > 0 && successes <= trials,
            "need 0 <= successes <= trials, trials > 0"
        );
        let t = trials as f64;
        let p = successes as f64 / t;
        let z2 = WILSON_Z * WILSON_Z;
        let (lo, hi) = if successes == 0 {
            (0.0, z2 / (t + z2))
        } else if successes == trials {
            (t / (t + z2), 1.0)
        } else {
            let centre = p + z2 / (2.0 * t);
            let half = WILSON_Z * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt();
            let denom = 1.0 + z2 / t;
            (((centre - half) / denom).max(0.0), ((centre + half) / denom).min(1.0))
        };
        FrequencyEstimate {
            successes,
            trials,
            estimate: p,
            wilson_lo: lo.min(p),
            wilson_hi: hi.max(p),
        }
    }

    /// Binomial standard error `sqrt(p(1-p)/t)` at the given reference probability.
    pub fn std_error_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// Standard error at the point estimate.
    pub fn std_error(&self) -> f64 {
        self.std_error_at(self.estimate)
    }
}

/// One exported row. For dominance rows `estimate` is a difference of
/// probabilities and the interval columns hold the `±3` standard error band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub property: String,
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub bound_value: Option<f64>,
}

impl ResultRow {
    pub fn frequency(n: usize, property: impl Into<String>, est: FrequencyEstimate, bound: Option<f64>) -> Self {
        ResultRow {
            n,
            property: property.into(),
            successes: est.successes,
            trials: est.trials,
            estimate: est.estimate,
            wilson_lo: est.wilson_lo,
            wilson_hi: est.wilson_hi,
            bound_value: bound,
        }
    }

    pub fn estimate(&self) -> FrequencyEstimate {
        FrequencyEstimate::new(self.successes, self.trials)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn get(&self, n: usize, property: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.n == n && r.property == property)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub n: usize,
    pub trial: u64,
    pub seed: SeedSpec,
    pub outcomes: BTreeMap<String, bool>,
    /// Stage 1, 2 and 3 success flags (algorithm campaigns only).
    pub stages: Option<[bool; 3]>,
    pub histogram: BTreeMap<usize, usize>,
    /// Excluded from determinism comparisons.
    pub wall_time_us: u64,
}

impl TrialSummary {
    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &TrialSummary) -> bool {
        TrialSummary {
            wall_time_us: 0,
            ..self.clone()
        } == TrialSummary {
            wall_time_us: 0,
            ..other.clone()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub table: ResultTable,
    pub summaries: Vec<TrialSummary>,
    /// Human-readable descriptions of failed checks (bound exceeded, lemma violated, lattice broken).
    pub violations: Vec<String>,
}

pub const COMBINED_PROPERTY: &str = "ir+enter-denied+exit-denied";

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::input(format!("thread pool: {e}"))),
    }
}

fn run_trials(
    campaign: &Campaign,
    n: usize,
    trial: impl Fn(SeedSpec) -> Result<TrialSummary> + Sync,
) -> Result<Vec<TrialSummary>> {
    (0..campaign.trials)
        .into_par_iter()
        .map(|t| {
            let seed = campaign.seed_for(n, t);
            let start = Instant::now();
            let mut s = trial(seed)?;
            s.trial = t;
            s.seed = seed;
            s.wall_time_us = start.elapsed().as_micros() as u64;
            Ok(s)
        })
        .collect()
}

fn count(summaries: &[TrialSummary], key: &str) -> u64 {
    summaries
        .iter()
        .filter(|s| s.outcomes.get(key).copied().unwrap_or(false))
        .count() as u64
}

fn lattice_violations(flags: &ConceptFlags) -> Vec<String> {
    implied_concepts(&flags.to_map())
        .expect("all concepts present")
        .into_iter()
        .map(|i| i.to_string())
        .collect()
}

/// Runs the three-stage algorithm on sampled games and measures the output.
pub fn run_mc_alg(campaign: &Campaign) -> Result<CampaignResult> {
    expect_kind(campaign, CampaignKind::McAlg)?;
    with_pool(campaign.threads, || {
        let mut result = CampaignResult::default();
        for &n in &campaign.n_values {
            let summaries = run_trials(campaign, n, |seed| {
                let game = sample_game(n, campaign.dist, seed)?;
                let out = run_three_stage(&game, &campaign.config)?;
                let flags = evaluate_all(&game, &out.partition)?;
                let mut outcomes: BTreeMap<String, bool> = Concept::ALL
                    .iter()
                    .map(|&c| (c.name().to_string(), flags.get(c)))
                    .collect();
                outcomes.insert(
                    COMBINED_PROPERTY.into(),
                    flags.get(Concept::IndividuallyRational)
                        && flags.get(Concept::EnterDenied)
                        && flags.get(Concept::ExitDenied),
                );
                outcomes.insert("lattice-ok".into(), lattice_violations(&flags).is_empty());
                let r = &out.report;
                Ok(TrialSummary {
                    n,
                    trial: 0,
                    seed,
                    outcomes,
                    stages: Some([r.stage1_success, r.stage2_success, r.stage3_success]),
                    histogram: r.coalition_size_histogram.clone(),
                    wall_time_us: 0,
                })
            })?;
            let t = summaries.len() as u64;
            let mut props: Vec<String> = campaign.concepts.iter().map(|c| c.name().to_string()).collect();
            props.push(COMBINED_PROPERTY.into());
            for p in props {
                let est = FrequencyEstimate::new(count(&summaries, &p), t);
                result.table.rows.push(ResultRow::frequency(n, p, est, None));
            }
            for (i, name) in ["stage1-success", "stage2-success", "stage3-success"]
                .iter()
                .enumerate()
            {
                let s = summaries.iter().filter(|s| s.stages.is_some_and(|f| f[i])).count() as u64;
                result
                    .table
                    .rows
                    .push(ResultRow::frequency(n, *name, FrequencyEstimate::new(s, t), None));
            }
            for s in summaries.iter().filter(|s| !s.outcomes["lattice-ok"]) {
                result
                    .violations
                    .push(format!("n={n} trial={}: lattice implication broken", s.trial));
            }
            result.summaries.extend(summaries);
        }
        Ok(result)
    })?
}

/// Measures concepts on the grand coalition (and the singleton partition) of sampled games.
pub fn run_grand_coalition_study(campaign: &Campaign) -> Result<CampaignResult> {
    expect_kind(campaign, CampaignKind::McGrand)?;
    let epsilon = campaign.dist.positive_mass();
    let UtilityDistribution::Uniform { lo, hi } = campaign.dist;
    with_pool(campaign.threads, || {
        let mut result = CampaignResult::default();
        for &n in &campaign.n_values {
            let grand = Partition::grand(n)?;
            let singles = Partition::singletons(n)?;
            let summaries = run_trials(campaign, n, |seed| {
                let game = sample_game(n, campaign.dist, seed)?;
                let flags = evaluate_all(&game, &grand)?;
                let mut outcomes: BTreeMap<String, bool> = Concept::ALL
                    .iter()
                    .map(|&c| (c.name().to_string(), flags.get(c)))
                    .collect();
                let single = check_labels_unchecked(&game, singles.assignment(), n, Concept::Nash);
                outcomes.insert("singletons-nash".into(), single.stable);
                Ok(TrialSummary {
                    n,
                    trial: 0,
                    seed,
                    outcomes,
                    stages: None,
                    histogram: grand.size_histogram(),
                    wall_time_us: 0,
                })
            })?;
            let t = summaries.len() as u64;
            let exit_prob = grand_cns_exit_denied_prob(n, epsilon)?;
            for &c in &campaign.concepts {
                let est = FrequencyEstimate::new(count(&summaries, c.name()), t);
                let bound = match c {
                    Concept::ExitDenied => {
                        if (est.estimate - exit_prob).abs() > 3.0 * est.std_error_at(exit_prob) {
                            result.violations.push(format!(
                                "n={n}: grand exit-denied frequency {} is not within 3 standard errors of {exit_prob}",
                                est.estimate
                            ));
                        }
                        Some(exit_prob)
                    }
                    Concept::Nash if lo + hi > 0.0 => {
                        let b = grand_ns_lower_bound(n, lo, hi)?;
                        if est.estimate < b {
                            result.violations.push(format!(
                                "n={n}: grand nash frequency {} below lower bound {b}",
                                est.estimate
                            ));
                        }
                        Some(b)
                    }
                    _ => None,
                };
                result.table.rows.push(ResultRow::frequency(n, c.name(), est, bound));
            }
            let est = FrequencyEstimate::new(count(&summaries, "singletons-nash"), t);
            result
                .table
                .rows
                .push(ResultRow::frequency(n, "singletons-nash", est, None));
            result.summaries.extend(summaries);
        }
        Ok(result)
    })?
}

/// Per trial and concept, decides exhaustively whether a stable partition
/// exists; for Nash stability also per coalition count, against the union bound.
pub fn run_oracle_existence(campaign: &Campaign) -> Result<CampaignResult> {
    expect_kind(campaign, CampaignKind::OracleExistence)?;
    with_pool(campaign.threads, || {
        let mut result = CampaignResult::default();
        for &n in &campaign.n_values {
            let limit = campaign.oracle_limit;
            let summaries = run_trials(campaign, n, |seed| {
                let game = sample_game(n, campaign.dist, seed)?;
                let mut outcomes = BTreeMap::new();
                for &c in &campaign.concepts {
                    if c == Concept::Nash {
                        let per_k = oracle::stable_block_counts_with_limit(&game, c, limit)?;
                        outcomes.insert(c.name().to_string(), per_k.iter().any(|&b| b));
                        for (k, &found) in per_k.iter().enumerate().skip(1) {
                            outcomes.insert(format!("nash:k={k}"), found);
                        }
                    } else {
                        let found = for_each_labels(n, limit, |labels, blocks| {
                            if check_labels_unchecked(&game, labels, blocks, c).stable {
                                std::ops::ControlFlow::Break(())
                            } else {
                                std::ops::ControlFlow::Continue(())
                            }
                        })?;
                        outcomes.insert(c.name().to_string(), found.is_some());
                    }
                }
                Ok(TrialSummary {
                    n,
                    trial: 0,
                    seed,
                    outcomes,
                    stages: None,
                    histogram: BTreeMap::new(),
                    wall_time_us: 0,
                })
            })?;
            let t = summaries.len() as u64;
            for &c in &campaign.concepts {
                let est = FrequencyEstimate::new(count(&summaries, c.name()), t);
                result.table.rows.push(ResultRow::frequency(n, c.name(), est, None));
                if c != Concept::Nash {
                    continue;
                }
                for k in 1..=n {
                    let key = format!("nash:k={k}");
                    let est = FrequencyEstimate::new(count(&summaries, &key), t);
                    let bound = if k == n {
                        all_singletons_ns_prob(n)
                    } else {
                        nash_k_composite_bound(n, k)?
                    };
                    if est.estimate > bound + 3.0 * est.std_error_at(bound.min(1.0)) {
                        result.violations.push(format!(
                            "n={n} k={k}: nash existence frequency {} exceeds bound {bound}",
                            est.estimate
                        ));
                    }
                    result.table.rows.push(ResultRow::frequency(n, key, est, Some(bound)));
                }
            }
            result.summaries.extend(summaries);
        }
        Ok(result)
    })?
}

/// The fixed partition of `0..n` into `k` contiguous blocks whose sizes differ by at most one.
pub fn equal_blocks(n: usize, k: usize) -> Result<Partition> {
    if k == 0 || k > n {
        return Err(Error::input(format!("cannot split {n} agents into {k} blocks")));
    }
    let mut coalitions = Vec::with_capacity(k);
    let mut next = 0;
    for i in 0..k {
        let size = n / k + usize::from(i < n % k);
        coalitions.push((next..next + size).collect());
        next += size;
    }
    Partition::new(n, coalitions)
}

/// Nash-stability frequency of a fixed equal-size partition against the shape bound.
pub fn run_bounds_compare(campaign: &Campaign) -> Result<CampaignResult> {
    expect_kind(campaign, CampaignKind::BoundsCompare)?;
    with_pool(campaign.threads, || {
        let mut result = CampaignResult::default();
        for &n in &campaign.n_values {
            for &k in &campaign.k_values {
                let partition = equal_blocks(n, k)?;
                let singletons = partition.has_singleton();
                let key = format!("fixed-nash:k={k}");
                let stream = (n as u64) << 16 | k as u64;
                let hits: u64 = (0..campaign.trials)
                    .into_par_iter()
                    .map(|t| -> Result<u64> {
                        let game = sample_game(n, campaign.dist, campaign.seed_for(stream as usize, t))?;
                        let v = check_labels_unchecked(&game, partition.assignment(), k, Concept::Nash);
                        Ok(u64::from(v.stable))
                    })
                    .sum::<Result<u64>>()?;
                let est = FrequencyEstimate::new(hits, campaign.trials);
                let bound = nash_partition_bound(n, k, singletons)?;
                if est.estimate > bound + 3.0 * est.std_error_at(bound.min(1.0)) {
                    result.violations.push(format!(
                        "n={n} k={k}: fixed-partition nash frequency {} exceeds bound {bound}",
                        est.estimate
                    ));
                }
                result.table.rows.push(ResultRow::frequency(n, key, est, Some(bound)));
            }
        }
        Ok(result)
    })?
}

/// Runs the dominance checks for every `(m, k)` with `m` from `n_values`.
pub fn run_lemma_verify(campaign: &Campaign) -> Result<CampaignResult> {
    expect_kind(campaign, CampaignKind::LemmaVerify)?;
    with_pool(campaign.threads, || {
        let mut result = CampaignResult::default();
        for &m in &campaign.n_values {
            for &k in &campaign.k_values {
                let seed = derive_trial_seed(SeedSpec::new(campaign.master_seed), (m as u64) << 16 | k as u64);
                let report = check_dominance_lemmas(m, k, campaign.trials, seed)?;
                for e in &report.estimates {
                    let property = match e.x {
                        Some(x) => format!("{}:k={k}:x={x}", e.check.tag()),
                        None => format!("{}:k={k}", e.check.tag()),
                    };
                    if e.is_violation() {
                        result.violations.push(format!(
                            "m={m} {property}: estimate {} below -3 standard errors ({})",
                            e.estimate, e.std_error
                        ));
                    }
                    result.table.rows.push(ResultRow {
                        n: m,
                        property,
                        successes: 0,
                        trials: report.trials,
                        estimate: e.estimate,
                        wilson_lo: e.estimate - 3.0 * e.std_error,
                        wilson_hi: e.estimate + 3.0 * e.std_error,
                        bound_value: Some(0.0),
                    });
                }
                debug_assert!(report.estimates.iter().any(|e| e.check == DominanceCheck::MaxSkew));
            }
        }
        Ok(result)
    })?
}

fn expect_kind(campaign: &Campaign, kind: CampaignKind) -> Result<()> {
    if campaign.kind != kind {
        return Err(Error::input(format!(
            "expected a {kind} campaign, got {}",
            campaign.kind
        )));
    }
    campaign.validate()
}

pub fn run_campaign(campaign: &Campaign) -> Result<CampaignResult> {
    match campaign.kind {
        CampaignKind::McAlg => run_mc_alg(campaign),
        CampaignKind::McGrand => run_grand_coalition_study(campaign),
        CampaignKind::OracleExistence => run_oracle_existence(campaign),
        CampaignKind::BoundsCompare => run_bounds_compare(campaign),
        CampaignKind::LemmaVerify => run_lemma_verify(campaign),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            _ => Err(Error::input(format!("unknown format {s:?}"))),
        }
    }
}

pub fn results_to_csv(table: &ResultTable) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record([
        "n",
        "property",
        "successes",
        "trials",
        "estimate",
        "wilson_lo",
        "wilson_hi",
        "bound_value",
    ])?;
    for row in &table.rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::input(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn results_to_json(table: &ResultTable) -> String {
    serde_json::to_string_pretty(table).expect("table serialises") + "\n"
}

pub fn results_from_json(text: &str) -> Result<ResultTable> {
    serde_json::from_str(text).map_err(|source| Error::Json {
        context: "result table".into(),
        source,
    })
}

pub fn export_results(table: &ResultTable, path: &Path, format: ExportFormat) -> Result<()> {
    let text = match format {
        ExportFormat::Csv => results_to_csv(table)?,
        ExportFormat::Json => results_to_json(table),
    };
    write_text(path, &text)
}

pub fn import_results_json(path: &Path) -> Result<ResultTable> {
    results_from_json(&read_text(path)?)
}

/// Campaign settings where each field may be absent, so that a config file
/// and command-line flags can be layered.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CampaignOverrides {
    pub kind: Option<CampaignKind>,
    pub n_values: Option<Vec<usize>>,
    pub trials: Option<u64>,
    pub dist: Option<UtilityDistribution>,
    pub master_seed: Option<u64>,
    pub concepts: Option<Vec<Concept>>,
    pub k_values: Option<Vec<usize>>,
    pub threads: Option<usize>,
    pub oracle_limit: Option<usize>,
    pub groups: Option<usize>,
    pub tau: Option<f64>,
    pub compat: Option<f64>,
    pub clique_size: Option<SizeRule>,
    pub remainder_cap: Option<CapRule>,
    pub merge_rate: Option<f64>,
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::input(format!("bad entry {s:?} for {key}")))
        })
        .collect()
}

fn parse_one<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::input(format!("bad value {raw:?} for {key}")))
}

/// `log:BASE:SCALE` or a fixed integer.
pub fn parse_size_rule(raw: &str) -> Result<SizeRule> {
    let raw = raw.trim();
    if raw.eq_ignore_ascii_case("default") {
        return Ok(SizeRule::DEFAULT_LOG);
    }
    if let Some(rest) = raw.strip_prefix("log:") {
        let (base, scale) = rest
            .split_once(':')
            .ok_or_else(|| Error::input(format!("size rule {raw:?} needs log:BASE:SCALE")))?;
        return Ok(SizeRule::Log {
            base: parse_one("clique_size", base)?,
            scale: parse_one("clique_size", scale)?,
        });
    }
    Ok(SizeRule::Fixed(parse_one("clique_size", raw)?))
}

/// `default` (the `n / log²` rule) or a fixed number.
pub fn parse_cap_rule(raw: &str) -> Result<CapRule> {
    let raw = raw.trim();
    if raw.eq_ignore_ascii_case("default") || raw.eq_ignore_ascii_case("log-squared") {
        return Ok(CapRule::LogSquared);
    }
    Ok(CapRule::Fixed(parse_one("remainder_cap", raw)?))
}

impl CampaignOverrides {
    /// Sets one key. Keys are case-insensitive and `-` is read as `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        match key.as_str() {
            "kind" => self.kind = Some(value.parse()?),
            "n" | "n_values" => self.n_values = Some(parse_list(&key, value)?),
            "trials" => self.trials = Some(parse_one(&key, value)?),
            "dist" => self.dist = Some(value.parse()?),
            "seed" | "master_seed" => self.master_seed = Some(parse_one(&key, value)?),
            "concepts" => {
                self.concepts = Some(
                    value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?,
                )
            }
            "k" | "k_values" => self.k_values = Some(parse_list(&key, value)?),
            "threads" => self.threads = Some(parse_one(&key, value)?),
            "oracle_limit" => self.oracle_limit = Some(parse_one(&key, value)?),
            "groups" => self.groups = Some(parse_one(&key, value)?),
            "tau" => self.tau = Some(parse_one(&key, value)?),
            "compat" => self.compat = Some(parse_one(&key, value)?),
            "clique_size" => self.clique_size = Some(parse_size_rule(value)?),
            "remainder_cap" => self.remainder_cap = Some(parse_cap_rule(value)?),
            "merge_rate" => self.merge_rate = Some(parse_one(&key, value)?),
            _ => return Err(Error::input(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Fields set in `other` win.
    pub fn layer(mut self, other: CampaignOverrides) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            kind,
            n_values,
            trials,
            dist,
            master_seed,
            concepts,
            k_values,
            threads,
            oracle_limit,
            groups,
            tau,
            compat,
            clique_size,
            remainder_cap,
            merge_rate
        );
        self
    }

    pub fn into_campaign(self) -> Result<Campaign> {
        let kind = self.kind.ok_or_else(|| Error::input("campaign kind is required"))?;
        let n_values = self.n_values.ok_or_else(|| Error::input("n values are required"))?;
        let trials = self.trials.ok_or_else(|| Error::input("trials is required"))?;
        let mut c = Campaign::new(kind, n_values, trials);
        if let Some(d) = self.dist {
            c.dist = d;
        }
        if let Some(s) = self.master_seed {
            c.master_seed = s;
        }
        if let Some(cs) = self.concepts {
            c.concepts = cs;
        }
        if let Some(k) = self.k_values {
            c.k_values = k;
        }
        c.threads = self.threads;
        if let Some(l) = self.oracle_limit {
            c.oracle_limit = l;
        }
        let cfg = &mut c.config;
        if let Some(g) = self.groups {
            cfg.groups = g;
        }
        if let Some(t) = self.tau {
            cfg.tau = t;
        }
        if let Some(x) = self.compat {
            cfg.compat = x;
        }
        if let Some(s) = self.clique_size {
            cfg.clique_size = s;
        }
        if let Some(r) = self.remainder_cap {
            cfg.remainder_cap = r;
        }
        if let Some(r) = self.merge_rate {
            cfg.merge_rate = r;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_campaign_config(text: &str) -> Result<CampaignOverrides> {
    let mut out = CampaignOverrides::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::input(format!("line {}: expected key = value", i + 1)))?;
        out.set(key, value)
            .map_err(|e| Error::input(format!("line {}: {e}", i + 1)))?;
    }
    Ok(out)
}
