//! Stochastic simulation and analysis of birth systems: reaction networks in
//! which every species duplicates at a common rate.
//!
//! - [`crn`]: networks, configurations, propensities.
//! - [`engine`]: exact SSA and tau-leaping.
//! - [`protocols`]: A-B amplifier, dual-rail gates, circuits.
//! - [`analysis`]: incomplete beta, closed-form bounds, extinction times.
//! - [`couplings`]: the coupled chains with per-step invariant checks.
//! - [`harness`]: seeded ensembles, statistics, reports.

pub mod analysis;
pub mod couplings;
pub mod crn;
pub mod engine;
pub mod harness;
pub mod protocols;
pub mod rng;
