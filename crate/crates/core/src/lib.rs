//! Auto-bidding equilibria of ROI-constrained value maximizers in
//! second-price auction markets.
//!
//! - [`market`]: auction rules, the equilibrium certificate, metrics.
//! - [`instance`]: seeded instance generators and the triplet file format.
//! - [`iterative`]: better-response dynamics and multi-start search.
//! - [`exact`]: rational feasibility, the tiny-market oracle, MIBLP export.
//! - [`experiments`]: instability, sensitivity, reserve and A/B studies.
//! - [`cli`]: the `autobid` command line.

pub mod cli;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod instance;
pub mod iterative;
pub mod market;
pub mod scalar;

pub use error::{Error, Result};
