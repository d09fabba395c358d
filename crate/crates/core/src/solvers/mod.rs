//! Single-letter optimizations: capacity, rate-distortion, distortion-rate,
//! cost-constrained additive-noise capacity and worst-noise capacity.

mod additive;
mod capacity;
mod rd;
mod worst_noise;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::Pmf;

pub use additive::{constrained_additive_capacity, AdditiveChannel};
pub use capacity::{capacity_trace, channel_capacity};
pub use rd::{distortion_rate, rate_distortion, rd_curve, RdPoint};
pub use worst_noise::{gibbs_law, quadratic_grid, worst_noise_capacity};

/// Knobs shared by all solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Target width of the `[lower_bound, upper_bound]` bracket, in bits.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Lagrange multipliers (nats per unit distortion) for the initial sweep;
    /// empty selects 64 log-spaced values scaled to the problem.
    pub lagrange_grid: Vec<f64>,
    pub multistart_count: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 200_000,
            lagrange_grid: Vec::new(),
            multistart_count: 3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if self.multistart_count == 0 {
            return Err(Error::InvalidArgument("multistart_count must be at least 1".into()));
        }
        if self.lagrange_grid.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(Error::InvalidArgument("lagrange multipliers must be positive".into()));
        }
        Ok(())
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

/// Outcome of a solver: a value in bits bracketed by certified bounds, and the
/// optimizing law (input law for capacities, noise law for worst-noise, output
/// law for rate-distortion).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub value: f64,
    pub argument: Pmf,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SolverResult {
    pub(crate) fn exact(value: f64, argument: Pmf) -> Self {
        Self {
            value,
            argument,
            lower_bound: value,
            upper_bound: value,
            iterations: 0,
            converged: true,
        }
    }

    pub fn gap(&self) -> f64 {
        self.upper_bound - self.lower_bound
    }
}

/// Index of the largest entry, ties within 1e-12 going to the lowest index.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] + 1e-12 {
            best = i;
        }
    }
    best
}

pub(crate) const LOG2E: f64 = std::f64::consts::LOG2_E;
