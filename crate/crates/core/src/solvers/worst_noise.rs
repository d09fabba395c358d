use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::additive::{AdditiveChannel, AdditiveSolution};
use super::{SolverConfig, SolverResult, LOG2E};
use crate::error::{Error, Result};
use crate::prob::{DistortionMeasure, FiniteAbelianGroup, Pmf};

/// Cyclic group `Z_len` with squared error on a grid spanning `[-4 sqrt(D), 4 sqrt(D)]`.
pub fn quadratic_grid(budget: f64, len: usize) -> (FiniteAbelianGroup, DistortionMeasure) {
    assert!(len >= 3, "grid needs at least three points");
    let spacing = 8.0 * budget.sqrt() / (len - 1) as f64;
    (
        FiniteAbelianGroup::cyclic(len),
        DistortionMeasure::quadratic_grid(len, spacing),
    )
}

/// Maximum-entropy law under `E c <= budget`: proportional to `exp(-lambda c)`
/// with the smallest `lambda >= 0` meeting the budget.
pub fn gibbs_law(cost: &[f64], budget: f64) -> Result<Pmf> {
    let min_cost = cost.iter().copied().fold(f64::INFINITY, f64::min);
    if !(budget >= min_cost) {
        return Err(Error::Infeasible(format!(
            "budget {budget} is below the cheapest letter cost {min_cost}"
        )));
    }
    let law = |lambda: f64| -> Vec<f64> {
        let w: Vec<f64> = cost.iter().map(|c| (-lambda * (c - min_cost)).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|v| v / z).collect()
    };
    let mean = |p: &[f64]| p.iter().zip(cost).map(|(a, b)| a * b).sum::<f64>();
    if mean(&law(0.0)) <= budget {
        return Pmf::from_weights(law(0.0));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while mean(&law(hi)) > budget && hi < 1e300 {
        lo = hi;
        hi *= 4.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(&law(mid)) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Pmf::from_weights(law(hi))
}

/// `min <g, N>` over laws `N` with `E c(N) <= budget`. Minimizers are either
/// single letters within budget or two-letter mixtures meeting it with equality.
fn linear_minimum(g: &[f64], cost: &[f64], budget: f64) -> f64 {
    let mut best = f64::INFINITY;
    let cheap: Vec<usize> = (0..g.len()).filter(|z| cost[*z] <= budget).collect();
    for z in &cheap {
        best = best.min(g[*z]);
    }
    for a in &cheap {
        if cost[*a] >= budget {
            continue;
        }
        for b in (0..g.len()).filter(|b| cost[*b] > budget) {
            let w = (cost[b] - budget) / (cost[b] - cost[*a]);
            best = best.min(w * g[*a] + (1.0 - w) * g[b]);
        }
    }
    best
}

struct Iterate {
    noise: Vec<f64>,
    sol: AdditiveSolution,
}

/// `C_X(D) = inf { C(D, N) : E d(N) <= D }` in bits.
///
/// `C(D, N)` is a supremum of functions convex in the noise law, so the
/// objective is convex; it is minimized by entropic mirror descent (multiplicative
/// steps followed by exponential tilting back onto the cost budget) from several
/// starts, each step re-solving the inner capacity from a warm start.
///
/// `value` and `upper_bound` come from the best noise found, returned as
/// `argument`; the value is an upper bound on `C_X(D)` up to the inner solver
/// tolerance. `lower_bound` is the Frank-Wolfe bound at that noise.
pub fn worst_noise_capacity(
    g: &FiniteAbelianGroup,
    d: &DistortionMeasure,
    budget: f64,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    cfg.validate()?;
    let cost = d.require_difference("worst-noise capacity")?.to_vec();
    if cost.len() != g.order() {
        return Err(Error::Dimension("cost vector does not match the group order".into()));
    }
    if !(budget >= 0.0) {
        return Err(Error::Infeasible(format!("budget {budget} must be nonnegative")));
    }
    let gibbs = gibbs_law(&cost, budget)?;
    let base = AdditiveChannel::new(&gibbs, d, g)?;
    let inner = SolverConfig {
        tolerance: (cfg.tolerance * 0.1).max(1e-11),
        max_iterations: (cfg.max_iterations / 8).max(1),
        ..cfg.clone()
    };

    let mut best: Option<Iterate> = None;
    let mut total_iterations = 0;
    for start in starts(&cost, budget, gibbs.probs(), cfg.multistart_count) {
        let it = descend(&base, start, budget, cfg, &inner, &mut total_iterations)?;
        if best.as_ref().map_or(true, |b| it.sol.result.value < b.sol.result.value - 1e-12) {
            best = Some(it);
        }
        if total_iterations >= cfg.max_iterations {
            break;
        }
    }
    let best = best.expect("at least one start");
    let lower = frank_wolfe_bound(&base, &best, &cost, budget);
    let value = best.sol.result.value;
    let upper = best.sol.result.upper_bound;
    Ok(SolverResult {
        value,
        argument: Pmf::from_weights(best.noise)?,
        lower_bound: lower.min(value),
        upper_bound: upper,
        iterations: total_iterations,
        converged: upper - lower <= cfg.tolerance,
    })
}

fn frank_wolfe_bound(base: &AdditiveChannel, it: &Iterate, cost: &[f64], budget: f64) -> f64 {
    let ch = base.with_noise(it.noise.clone());
    let grad = ch.noise_gradient(&it.sol.input, &it.sol.log_output);
    let at_n: f64 = grad.iter().zip(&it.noise).map(|(a, b)| a * b).sum();
    let lin = linear_minimum(&grad, cost, budget);
    // I(r, .) is convex and below C(D, .), so its linearization bounds C_X from below
    (it.sol.result.lower_bound + (lin - at_n) * LOG2E).max(0.0)
}

/// Deterministic starting laws, each mixed with the Gibbs law so every start
/// has full support and meets the budget.
fn starts(cost: &[f64], budget: f64, gibbs: &[f64], count: usize) -> Vec<Vec<f64>> {
    let n = cost.len();
    let mut out = vec![gibbs.to_vec()];
    let blend = |v: &[f64]| -> Vec<f64> {
        v.iter().zip(gibbs).map(|(a, b)| 0.8 * a + 0.2 * b).collect()
    };
    // uniform over affordable letters
    let affordable: Vec<f64> = cost.iter().map(|c| if *c <= budget { 1.0 } else { 0.0 }).collect();
    let k: f64 = affordable.iter().sum();
    out.push(blend(&affordable.iter().map(|v| v / k).collect::<Vec<_>>()));
    // two-point law: the identity and the cheapest letter above budget
    let zero = (0..n).find(|z| cost[*z] == 0.0).unwrap_or(0);
    if let Some(far) = (0..n)
        .filter(|z| cost[*z] > budget)
        .min_by(|a, b| cost[*a].total_cmp(&cost[*b]))
    {
        let w = budget / cost[far];
        let mut v = vec![0.0; n];
        v[zero] = 1.0 - w;
        v[far] = w;
        out.push(blend(&v));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    while out.len() < count {
        let v: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
        let s: f64 = v.iter().sum();
        out.push(blend(&v.iter().map(|x| x / s).collect::<Vec<_>>()));
    }
    out.truncate(count);
    out
}

fn descend(
    base: &AdditiveChannel,
    start: Vec<f64>,
    budget: f64,
    cfg: &SolverConfig,
    inner: &SolverConfig,
    total: &mut usize,
) -> Result<Iterate> {
    let log_start: Vec<f64> = start.iter().map(|v| v.max(1e-300).ln()).collect();
    let noise = base.tilt(&log_start, budget).0;
    let sol = base.with_noise(noise.clone()).solve_from(None, budget, inner)?;
    *total += sol.result.iterations;
    let mut cur = Iterate { noise, sol };
    let mut eta = 1.0;
    while *total < cfg.max_iterations {
        let ch = base.with_noise(cur.noise.clone());
        let grad = ch.noise_gradient(&cur.sol.input, &cur.sol.log_output);
        let gap = frank_wolfe_bound(base, &cur, base.cost(), budget);
        if cur.sol.result.upper_bound - gap <= cfg.tolerance {
            break;
        }
        let log_next: Vec<f64> = cur
            .noise
            .iter()
            .zip(&grad)
            .map(|(p, g)| p.max(1e-300).ln() - eta * g)
            .collect();
        let noise = base.tilt(&log_next, budget).0;
        let sol = base
            .with_noise(noise.clone())
            .solve_from(Some(&cur.sol.input), budget, inner)?;
        *total += sol.result.iterations;
        if sol.result.value < cur.sol.result.value - 1e-15 {
            cur = Iterate { noise, sol };
            eta = (eta * 1.5).min(1e3);
        } else {
            eta *= 0.5;
            if eta < 1e-8 {
                break;
            }
        }
    }
    Ok(cur)
}
