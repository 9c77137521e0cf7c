//! Additively separable hedonic games: stability checks, random sampling,
//! a three-stage clustering algorithm, exhaustive search for small games,
//! closed-form bounds and Monte Carlo campaigns.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod game;
pub mod io;
pub mod oracle;
pub mod sampler;
pub mod stability;
pub mod three_stage;

pub use error::{Error, Result};
pub use game::{enumerate_deviations, Agent, Deviation, HedonicGame, PartialPartition, Partition, Target};
pub use sampler::{derive_trial_seed, sample_game, SeedSpec, UtilityDistribution};
pub use stability::{check, evaluate_all, implied_concepts, Concept, ConceptFlags, Implication, Verdict, Witness};
pub use three_stage::{run_three_stage, AlgoConfig};
