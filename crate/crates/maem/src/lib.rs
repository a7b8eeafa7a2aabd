//! Agent-based wealth exchange simulation with weighted growth
//! redistribution.
//!
//! The model: N agents start with equal wealth. Each time unit performs N
//! pairwise exchanges — a random pair, a fair coin, and a transfer of a
//! fraction alpha of the poorer agent's wealth to the winner — followed by
//! one growth event that injects mu * W into the population, split in
//! proportion to w^gamma. The exponent gamma steers the split from equal
//! (gamma = 0) through wealth-proportional (gamma = 1) to rich-weighted
//! (gamma > 1), which is the lever behind the model's phase behavior.
//!
//! The crate provides the engine, the observables (rank distributions,
//! percentile statistics, rank mobility, and the time-average wealth
//! metric), a geometric-random-walk reference ensemble, experiment drivers
//! for the headline claims, and a batch CLI that writes self-describing CSV
//! tables.

pub mod config;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod grw;
pub mod observables;
pub mod output;
pub mod rng;

pub use engine::{ModelParams, WealthState};
pub use error::{ConfigError, Error, Result};
