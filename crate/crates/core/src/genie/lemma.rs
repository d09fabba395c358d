use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::AuxChain;
use super::rates::level_joint;
use crate::error::{Error, Result};
use crate::prob::info::conditional_mutual_information;
use crate::prob::{Dmc, Pmf};
use crate::solvers::{constrained_additive_capacity, SolverConfig};

/// Slack of one rate-loss inequality for reconstruction `i` at chain level `k`
/// (both 1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateLossSlack {
    pub i: usize,
    pub k: usize,
    pub left: f64,
    /// Certified upper bound on `C(D_i, U_k)`.
    pub bound: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateLossReport {
    pub slacks: Vec<RateLossSlack>,
    /// Entries with `left > bound + 1e-9`.
    pub violations: usize,
    pub min_slack: f64,
}

/// Evaluates, for every reconstruction `Ŝ_i ~ recon[i](. | S)` and level `k`,
///
/// - `k = 1`: `I(S+U_1; S) - I(S+U_1; Ŝ_i) <= C(D_i, U_1)`
/// - `1 < k < K`: `I(S+U_k; S | S+U_{k-1}) - I(S+U_k; Ŝ_i | S+U_{k-1}) <= C(D_i, U_k)`
/// - `k = K > 1`: `I(S+U_K; S | S+U_{K-1}) - I(S; Ŝ_i | S+U_{K-1}) <= C(D_i, U_K)`
///
/// with `D_i` the chain budget at level `i`. Each reconstruction must meet
/// `E d(S - Ŝ_i) <= D_i`.
pub fn verify_rate_loss_bounds(
    src: &Pmf,
    recon: &[Dmc],
    chain: &AuxChain,
    cfg: &SolverConfig,
) -> Result<RateLossReport> {
    let k_levels = chain.len();
    if recon.len() != k_levels {
        return Err(Error::Dimension(format!(
            "{} reconstruction channels for a chain of {k_levels} levels",
            recon.len()
        )));
    }
    let q = chain.group.order();
    for (i, w) in recon.iter().enumerate() {
        if w.input_size() != q || w.output_size() != q {
            return Err(Error::Dimension(format!("reconstruction channel {} is not {q} x {q}", i + 1)));
        }
        let dist: f64 = (0..q)
            .map(|s| src.prob(s) * (0..q).map(|r| w.prob(s, r) * chain.measure.d(s, r)).sum::<f64>())
            .sum();
        if dist > chain.budgets[i] + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "reconstruction {} has distortion {dist} above its budget {}",
                i + 1,
                chain.budgets[i]
            )));
        }
    }
    let pairs: Vec<(usize, usize)> = (0..k_levels).flat_map(|i| (0..k_levels).map(move |k| (i, k))).collect();
    let slacks: Vec<RateLossSlack> = pairs
        .into_par_iter()
        .map(|(i, k)| {
            let j = level_joint(src, chain, k, Some(&recon[i]))?;
            // axes: S, Z_k, [Z_{k-1}], Ŝ
            let left = if k == 0 {
                conditional_mutual_information(&j, &[1], &[0], &[])?
                    - conditional_mutual_information(&j, &[1], &[2], &[])?
            } else if k + 1 < k_levels {
                conditional_mutual_information(&j, &[1], &[0], &[2])?
                    - conditional_mutual_information(&j, &[1], &[3], &[2])?
            } else {
                conditional_mutual_information(&j, &[1], &[0], &[2])?
                    - conditional_mutual_information(&j, &[0], &[3], &[2])?
            };
            let c = constrained_additive_capacity(
                &chain.u_laws[k],
                &chain.measure,
                chain.budgets[i],
                &chain.group,
                cfg,
            )
            .map_err(|e| e.in_context(format!("C(D_{}, U_{})", i + 1, k + 1)))?;
            let bound = c.upper_bound.max(c.value);
            Ok(RateLossSlack {
                i: i + 1,
                k: k + 1,
                left,
                bound,
                slack: bound - left,
            })
        })
        .collect::<Result<_>>()?;
    let violations = slacks.iter().filter(|s| s.slack < -1e-9).count();
    let min_slack = slacks.iter().map(|s| s.slack).fold(f64::INFINITY, f64::min);
    Ok(RateLossReport {
        slacks,
        violations,
        min_slack,
    })
}
