//! Solvers and simulators for separation-based coding over networks.
//!
//! [`prob`] holds the finite-alphabet substrate, [`solvers`] the single-letter
//! optimizations, [`network`] the problem data model, [`genie`] the multicast
//! rate machinery and [`sim`] the seeded Monte-Carlo experiments.

pub mod error;
pub mod genie;
pub mod network;
pub mod prob;
pub mod sim;
pub mod solvers;

pub use error::{Error, Result};
