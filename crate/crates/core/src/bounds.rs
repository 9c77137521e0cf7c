//! Closed-form probabilities and inequalities for random hedonic games,
//! plus Monte Carlo checks of the distributional dominance facts behind them.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{binomial, stirling2};
use crate::sampler::{derive_trial_seed, SeedSpec, UtilityDistribution};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub description: String,
}

/// Probability that every member of the grand coalition is liked by someone,
/// when each utility is positive independently with probability `epsilon`.
pub fn grand_cns_exit_denied_prob(n: usize, epsilon: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::input("n must be at least 1"));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::input(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    let liked = 1.0 - (1.0 - epsilon).powi(n as i32 - 1);
    Ok(liked.powi(n as i32))
}

/// Hoeffding lower bound on the grand coalition being Nash stable under `U(lo, hi)`.
pub fn grand_ns_lower_bound(n: usize, lo: f64, hi: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::input("n must be at least 1"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::input(format!("need finite lo < hi, got ({lo}, {hi})")));
    }
    if lo + hi <= 0.0 {
        return Err(Error::input("the bound needs a positive mean"));
    }
    let exponent = -((n - 1) as f64) * (lo + hi).powi(2) / (2.0 * (hi - lo));
    Ok((1.0 - n as f64 * exponent.exp()).clamp(0.0, 1.0))
}

/// Bound on a fixed partition into `k` coalitions being Nash stable under
/// a symmetric distribution. Without singletons the sharper form applies;
/// the formula value is returned even for shapes that cannot exist.
pub fn nash_partition_bound(n: usize, k: usize, allow_singletons: bool) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::input(format!("k must lie in [1, n], got k={k}, n={n}")));
    }
    let base = if allow_singletons {
        1.0 / k as f64
    } else {
        (1.0 - 0.5f64.powi(k as i32)) / k as f64
    };
    Ok(base.powi(n as i32))
}

fn pow2(e: usize) -> BigInt {
    BigInt::one() << e
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::INFINITY)
}

/// Exact rational value of the union bound on "some partition into exactly
/// `k` coalitions is Nash stable", split by the number `ℓ` of singletons.
pub fn nash_k_composite_bound_exact(n: usize, k: usize) -> Result<BigRational> {
    if k == 0 || k >= n {
        return Err(Error::input(format!(
            "k must lie in [1, n-1], got k={k}, n={n}; use all_singletons_ns_prob for k = n"
        )));
    }
    let mut total = BigRational::zero();
    for l in 0..k {
        let blocks = k - l;
        let rest = n - l;
        let s = stirling2(rest, blocks);
        if s.is_zero() {
            continue;
        }
        let coeff = BigInt::from(binomial(n, l) * s);
        let lead = BigRational::new(coeff, pow2(l * (k - 1)));
        let base = BigRational::new(pow2(blocks) - BigInt::one(), pow2(blocks) * BigInt::from(blocks));
        total += lead * num_traits::pow(base, rest);
    }
    Ok(total)
}

pub fn nash_k_composite_bound(n: usize, k: usize) -> Result<f64> {
    nash_k_composite_bound_exact(n, k).map(|r| ratio_to_f64(&r))
}

/// Exact Nash-stability probability of the all-singleton partition under a
/// symmetric continuous distribution: every ordered utility must be negative.
pub fn all_singletons_ns_prob(n: usize) -> f64 {
    let pairs = n * n.saturating_sub(1);
    let r = BigRational::new(BigInt::one(), pow2(pairs));
    ratio_to_f64(&r)
}

/// Whether `Π q_i^{s_i} ≤ (Σq / k)^{Σs}`, with a relative slack of a few ulps per factor.
pub fn verify_lagrange_product_bound(s: &[u64], q: &[f64]) -> Result<bool> {
    if s.len() != q.len() {
        return Err(Error::input(format!(
            "length mismatch: {} exponents, {} bases",
            s.len(),
            q.len()
        )));
    }
    if s.is_empty() {
        return Err(Error::input("need at least one term"));
    }
    if s.contains(&0) || q.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::input("exponents must be positive and bases nonnegative"));
    }
    let n: u64 = s.iter().sum();
    let z: f64 = q.iter().sum();
    let lhs: f64 = s.iter().zip(q).map(|(&e, &x)| x.powi(e as i32)).product();
    let rhs = (z / s.len() as f64).powi(n as i32);
    Ok(lhs <= rhs * (1.0 + 4.0 * n as f64 * f64::EPSILON))
}

/// Bound on `P(X₁ + … + X_t ≤ -threshold)` for independent `U(-1, 1)` terms.
pub fn hoeffding_tail(t_terms: u64, threshold: f64) -> Result<f64> {
    if t_terms == 0 {
        return Err(Error::input("need at least one term"));
    }
    Ok((-2.0 * threshold * threshold / (4.0 * t_terms as f64)).exp())
}

/// A named closed-form expression with its parameters, as accepted on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "formula", rename_all = "kebab-case")]
pub enum Formula {
    GrandExitDenied { n: usize, epsilon: f64 },
    GrandNash { n: usize, lo: f64, hi: f64 },
    NashPartition { n: usize, k: usize, allow_singletons: bool },
    NashComposite { n: usize, k: usize },
    AllSingletons { n: usize },
    HoeffdingTail { t: u64, threshold: f64 },
}

impl Formula {
    pub const NAMES: [&'static str; 6] = [
        "grand-exit-denied",
        "grand-nash",
        "nash-partition",
        "nash-composite",
        "all-singletons",
        "hoeffding-tail",
    ];

    /// Parses a formula name and `key=value` parameters separated by commas.
    pub fn parse(name: &str, params: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for item in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::input(format!("parameter {item:?} is not key=value")))?;
            pairs.push((k.trim().to_ascii_lowercase().replace('_', "-"), v.trim()));
        }
        let lookup = |key: &str| -> Result<&str> {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::input(format!("formula {name} needs parameter {key}")))
        };
        fn num<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
            raw.parse()
                .map_err(|_| Error::input(format!("bad value {raw:?} for {key}")))
        }
        let get_usize = |key: &str| lookup(key).and_then(|v| num::<usize>(key, v));
        let get_f64 = |key: &str| lookup(key).and_then(|v| num::<f64>(key, v));
        let formula = match name.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "grand-exit-denied" => Formula::GrandExitDenied {
                n: get_usize("n")?,
                epsilon: get_f64("epsilon")?,
            },
            "grand-nash" => Formula::GrandNash {
                n: get_usize("n")?,
                lo: get_f64("lo")?,
                hi: get_f64("hi")?,
            },
            "nash-partition" => Formula::NashPartition {
                n: get_usize("n")?,
                k: get_usize("k")?,
                allow_singletons: match lookup("singletons") {
                    Ok(v) => num::<bool>("singletons", v)?,
                    Err(_) => true,
                },
            },
            "nash-composite" => Formula::NashComposite {
                n: get_usize("n")?,
                k: get_usize("k")?,
            },
            "all-singletons" => Formula::AllSingletons { n: get_usize("n")? },
            "hoeffding-tail" => Formula::HoeffdingTail {
                t: lookup("t").and_then(|v| num::<u64>("t", v))?,
                threshold: get_f64("threshold")?,
            },
            other => {
                return Err(Error::input(format!(
                    "unknown formula {other:?}; expected one of {}",
                    Self::NAMES.join(", ")
                )))
            }
        };
        Ok(formula)
    }

    pub fn eval(&self) -> Result<BoundValue> {
        let value = match *self {
            Formula::GrandExitDenied { n, epsilon } => grand_cns_exit_denied_prob(n, epsilon)?,
            Formula::GrandNash { n, lo, hi } => grand_ns_lower_bound(n, lo, hi)?,
            Formula::NashPartition { n, k, allow_singletons } => nash_partition_bound(n, k, allow_singletons)?,
            Formula::NashComposite { n, k } => nash_k_composite_bound(n, k)?,
            Formula::AllSingletons { n } => all_singletons_ns_prob(n),
            Formula::HoeffdingTail { t, threshold } => hoeffding_tail(t, threshold)?,
        };
        Ok(BoundValue {
            value,
            description: self.to_string(),
        })
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Formula::GrandExitDenied { n, epsilon } => write!(f, "grand-exit-denied(n={n}, epsilon={epsilon})"),
            Formula::GrandNash { n, lo, hi } => write!(f, "grand-nash(n={n}, lo={lo}, hi={hi})"),
            Formula::NashPartition { n, k, allow_singletons } => {
                write!(f, "nash-partition(n={n}, k={k}, singletons={allow_singletons})")
            }
            Formula::NashComposite { n, k } => write!(f, "nash-composite(n={n}, k={k})"),
            Formula::AllSingletons { n } => write!(f, "all-singletons(n={n})"),
            Formula::HoeffdingTail { t, threshold } => write!(f, "hoeffding-tail(t={t}, threshold={threshold})"),
        }
    }
}

/// Which dominance fact an estimate probes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DominanceCheck {
    /// `P(Z + X ≥ Y) − P(Z ≥ Y)`.
    ShiftBeatsMax,
    /// `P(X ≥ max(Z₂..Z_k)) − P(0 ≥ max(Z₂..Z_k))`.
    DrawBeatsZero,
    /// `P(S_{m+1} ≥ x) − P(S_m ≥ x)`.
    LongerSumTail,
    /// `P(Y ∈ [0, x]) − P(Y ∈ [−x, 0])`.
    MaxSkew,
}

impl DominanceCheck {
    pub fn tag(self) -> &'static str {
        match self {
            DominanceCheck::ShiftBeatsMax => "shift-beats-max",
            DominanceCheck::DrawBeatsZero => "draw-beats-zero",
            DominanceCheck::LongerSumTail => "longer-sum-tail",
            DominanceCheck::MaxSkew => "max-skew",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceEstimate {
    pub check: DominanceCheck,
    pub x: Option<f64>,
    pub estimate: f64,
    pub std_error: f64,
}

impl DominanceEstimate {
    pub fn is_violation(&self) -> bool {
        self.estimate < -3.0 * self.std_error
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub m: usize,
    pub k: usize,
    pub trials: u64,
    pub estimates: Vec<DominanceEstimate>,
}

impl DominanceReport {
    pub fn violations(&self) -> Vec<&DominanceEstimate> {
        self.estimates.iter().filter(|e| e.is_violation()).collect()
    }

    pub fn passed(&self) -> bool {
        self.violations().is_empty()
    }
}

pub const DOMINANCE_GRID: [f64; 7] = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0];
pub const MIN_DOMINANCE_TRIALS: u64 = 100_000;
const BLOCK: u64 = 4096;

/// Integer accumulator of antithetic pair sums `d ∈ {-2, …, 2}`.
#[derive(Clone, Copy, Default)]
struct Moments {
    sum: i64,
    sum_sq: i64,
}

impl Moments {
    fn push(&mut self, d: i64) {
        self.sum += d;
        self.sum_sq += d * d;
    }

    fn add(self, o: Moments) -> Moments {
        Moments {
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
        }
    }

    /// Mean and standard error of `d / 2`.
    fn estimate(&self, trials: u64) -> (f64, f64) {
        let t = trials as f64;
        let mean = self.sum as f64 / t;
        let var = if trials > 1 {
            ((self.sum_sq as f64 - t * mean * mean) / (t - 1.0)).max(0.0)
        } else {
            0.0
        };
        (mean / 2.0, (var / t).sqrt() / 2.0)
    }
}

fn ind(b: bool) -> i64 {
    b as i64
}

/// Monte Carlo check of four dominance facts for sums of `U(-1, 1)` draws.
///
/// `Z` is a sum of `m` draws, `X` a single draw, and `Y` the maximum of `k`
/// independent such sums. Each trial evaluates the paired difference on a
/// draw and on its negation, which cancels exactly wherever the difference
/// is an odd function of the draws. An estimate below `-3` standard errors
/// is flagged.
pub fn check_dominance_lemmas(m: usize, k: usize, trials: u64, seed: SeedSpec) -> Result<DominanceReport> {
    if m == 0 || k == 0 {
        return Err(Error::input("m and k must be positive"));
    }
    if trials < MIN_DOMINANCE_TRIALS {
        return Err(Error::input(format!(
            "need at least {MIN_DOMINANCE_TRIALS} trials, got {trials}"
        )));
    }
    let grid = DOMINANCE_GRID.len();
    // Slots: shift, draw, then one per grid point for each of the last two checks.
    let slots = 2 + 2 * grid;
    let dist = UtilityDistribution::standard();
    let blocks = trials.div_ceil(BLOCK);

    let totals = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = derive_trial_seed(seed, b).rng();
            let mut acc = vec![Moments::default(); slots];
            let mut sums = vec![0.0; k];
            let mut d = vec![0i64; slots];
            let count = BLOCK.min(trials - b * BLOCK);
            for _ in 0..count {
                let z: f64 = (0..m).map(|_| dist.sample(&mut rng)).sum();
                let x = dist.sample(&mut rng);
                for s in sums.iter_mut() {
                    *s = (0..m).map(|_| dist.sample(&mut rng)).sum();
                }
                d.fill(0);
                for sign in [1.0, -1.0] {
                    let (z, x) = (sign * z, sign * x);
                    let y = sums.iter().map(|s| sign * s).fold(f64::NEG_INFINITY, f64::max);
                    let others = sums[..k - 1].iter().map(|s| sign * s).fold(f64::NEG_INFINITY, f64::max);
                    d[0] += ind(z + x >= y) - ind(z >= y);
                    d[1] += ind(x >= others) - ind(0.0 >= others);
                    for (i, &t) in DOMINANCE_GRID.iter().enumerate() {
                        d[2 + i] += ind(z + x >= t) - ind(z >= t);
                        d[2 + grid + i] += ind((0.0..=t).contains(&y)) - ind((-t..=0.0).contains(&y));
                    }
                }
                for (a, &v) in acc.iter_mut().zip(&d) {
                    a.push(v);
                }
            }
            acc
        })
        .reduce(
            || vec![Moments::default(); slots],
            |a, b| a.into_iter().zip(b).map(|(x, y)| x.add(y)).collect(),
        );

    let mut estimates = Vec::with_capacity(slots);
    let mut push = |check, x, mom: &Moments| {
        let (estimate, std_error) = mom.estimate(trials);
        estimates.push(DominanceEstimate {
            check,
            x,
            estimate,
            std_error,
        });
    };
    push(DominanceCheck::ShiftBeatsMax, None, &totals[0]);
    push(DominanceCheck::DrawBeatsZero, None, &totals[1]);
    for (i, &t) in DOMINANCE_GRID.iter().enumerate() {
        push(DominanceCheck::LongerSumTail, Some(t), &totals[2 + i]);
    }
    for (i, &t) in DOMINANCE_GRID.iter().enumerate() {
        push(DominanceCheck::MaxSkew, Some(t), &totals[2 + grid + i]);
    }
    Ok(DominanceReport {
        m,
        k,
        trials,
        estimates,
    })
}

/// `BigUint` as `f64`, saturating to infinity.
pub fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}
