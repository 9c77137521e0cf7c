//! Random games with i.i.d. utilities.
//!
//! Every generator is a ChaCha8 stream keyed by `(master_seed, stream_index)`,
//! so a trial's game depends only on its derived seed and never on which
//! thread ran it or in what order.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::HedonicGame;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum UtilityDistribution {
    Uniform { lo: f64, hi: f64 },
}

impl UtilityDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::input(format!(
                "uniform distribution needs finite lo < hi, got ({lo}, {hi})"
            )));
        }
        Ok(UtilityDistribution::Uniform { lo, hi })
    }

    /// `U(-1, 1)`.
    pub fn standard() -> Self {
        UtilityDistribution::Uniform { lo: -1.0, hi: 1.0 }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            UtilityDistribution::Uniform { lo, hi } => (lo + hi) / 2.0,
        }
    }

    /// `P(X > 0)`.
    pub fn positive_mass(&self) -> f64 {
        match *self {
            UtilityDistribution::Uniform { lo, hi } => ((hi - lo.max(0.0)) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// One draw from the open interval; endpoint hits are redrawn.
    pub fn sample(&self, rng: &mut impl RngCore) -> f64 {
        match *self {
            UtilityDistribution::Uniform { lo, hi } => loop {
                let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                let x = lo + (hi - lo) * unit;
                if x > lo && x < hi {
                    return x;
                }
            },
        }
    }
}

impl Default for UtilityDistribution {
    fn default() -> Self {
        Self::standard()
    }
}

impl fmt::Display for UtilityDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilityDistribution::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
        }
    }
}

/// Parses `uniform:LO:HI`.
impl FromStr for UtilityDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().splitn(3, ':');
        let kind = parts.next().unwrap_or_default();
        if !kind.eq_ignore_ascii_case("uniform") {
            return Err(Error::input(format!("unknown distribution {s:?}")));
        }
        let mut bound = |name: &str| -> Result<f64> {
            let raw = parts
                .next()
                .ok_or_else(|| Error::input(format!("distribution {s:?} is missing {name}")))?;
            raw.trim()
                .parse()
                .map_err(|_| Error::input(format!("bad {name} {raw:?} in distribution {s:?}")))
        };
        let lo = bound("lo")?;
        let hi = bound("hi")?;
        UtilityDistribution::uniform(lo, hi)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        SeedSpec {
            master_seed,
            stream_index: 0,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

impl fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{:#x}", self.master_seed, self.stream_index)
    }
}

/// Seed of trial `trial` under `master`. Injective in `trial`; nesting twice
/// (`derive(derive(m, i), j)`) stays collision-free while `i, j < 2^32`.
pub fn derive_trial_seed(master: SeedSpec, trial: u64) -> SeedSpec {
    SeedSpec {
        master_seed: master.master_seed,
        stream_index: master.stream_index.rotate_left(32) ^ trial,
    }
}

/// A game whose off-diagonal utilities are drawn row-major from `dist`.
pub fn sample_game(n: usize, dist: UtilityDistribution, seed: SeedSpec) -> Result<HedonicGame> {
    if n == 0 {
        return Err(Error::input("cannot sample a game with zero agents"));
    }
    let mut rng = seed.rng();
    HedonicGame::from_fn(n, |_, _| dist.sample(&mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic() {
        let d = UtilityDistribution::standard();
        let s = SeedSpec::new(42);
        assert_eq!(sample_game(9, d, s).unwrap(), sample_game(9, d, s).unwrap());
        assert_ne!(
            sample_game(9, d, s).unwrap(),
            sample_game(9, d, derive_trial_seed(s, 1)).unwrap()
        );
    }

    #[test]
    fn support_is_open_interval() {
        let g = sample_game(60, UtilityDistribution::standard(), SeedSpec::new(7)).unwrap();
        for a in 0..60 {
            for b in 0..60 {
                let u = g.utility(a, b);
                if a == b {
                    assert_eq!(u, 0.0);
                } else {
                    assert!(u > -1.0 && u < 1.0);
                }
            }
        }
    }

    #[test]
    fn zero_agents_rejected() {
        assert!(sample_game(0, UtilityDistribution::standard(), SeedSpec::new(1)).is_err());
    }

    #[test]
    fn parse_distribution() {
        assert_eq!(
            "uniform:-1:1".parse::<UtilityDistribution>().unwrap(),
            UtilityDistribution::standard()
        );
        assert_eq!(
            "uniform:-0.5:1.5".parse::<UtilityDistribution>().unwrap(),
            UtilityDistribution::Uniform { lo: -0.5, hi: 1.5 }
        );
        for bad in [
            "uniform:1:1",
            "uniform:2:1",
            "normal:0:1",
            "uniform:-1",
            "uniform:a:1",
            "uniform:nan:1",
        ] {
            assert!(bad.parse::<UtilityDistribution>().is_err(), "{bad}");
        }
        let d = UtilityDistribution::uniform(-0.25, 3.0).unwrap();
        assert_eq!(d.to_string().parse::<UtilityDistribution>().unwrap(), d);
    }

    #[test]
    fn positive_mass() {
        assert_eq!(UtilityDistribution::standard().positive_mass(), 0.5);
        assert_eq!(UtilityDistribution::uniform(-1.0, 0.0).unwrap().positive_mass(), 0.0);
        assert_eq!(UtilityDistribution::uniform(0.1, 1.0).unwrap().positive_mass(), 1.0);
    }

    #[test]
    fn derived_seeds() {
        let m = SeedSpec::new(3);
        assert_ne!(derive_trial_seed(m, 0), derive_trial_seed(m, 1));
        assert_eq!(derive_trial_seed(m, 5), derive_trial_seed(m, 5));
    }
}
