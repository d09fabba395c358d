use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::chain::{build_aux_chain, chain_laws, AuxChain};
use crate::error::{Error, Result};
use crate::prob::{DistortionMeasure, FiniteAbelianGroup, Pmf};
use crate::solvers::{constrained_additive_capacity, gibbs_law, SolverConfig};

/// Settings of the chain heuristic.
#[derive(Debug, Clone)]
pub struct ChainSearch {
    pub starts: usize,
    pub sweeps: usize,
    pub seed: u64,
}

impl Default for ChainSearch {
    fn default() -> Self {
        Self { starts: 3, sweeps: 8, seed: 0 }
    }
}

/// Heuristic search for noise laws `V` that lower the largest genie entry
/// `max_k C(D_k, U_k)` subject to `E d(U_k) <= D_k`, with `budgets` ordered from
/// the largest distortion down.
///
/// Coordinate descent: each sweep tries, for every level, mixtures of the current
/// `V_k` with the identity, the Gibbs law of its budget and random point masses,
/// keeping the best feasible move. The first start is the feasible chain with
/// `V_K` the Gibbs law of `D_K` and identity elsewhere; later starts perturb it.
/// Nothing is claimed about optimality.
pub fn optimize_aux_chain(
    g: &FiniteAbelianGroup,
    d: &DistortionMeasure,
    budgets: &[f64],
    search: &ChainSearch,
    cfg: &SolverConfig,
) -> Result<AuxChain> {
    let k = budgets.len();
    if k == 0 {
        return Err(Error::InvalidArgument("no distortion budgets".into()));
    }
    if budgets.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("budgets must be nonincreasing".into()));
    }
    let cost = d.require_difference("aux chain search")?.to_vec();
    let q = g.order();
    let identity = Pmf::point_mass(q, g.identity());
    let mut base = vec![identity.clone(); k];
    base[k - 1] = gibbs_law(&cost, budgets[k - 1])?;
    let objective = |v: &[Pmf]| -> Result<Option<f64>> {
        let u = chain_laws(v, g)?;
        let mut worst: f64 = 0.0;
        for (level, law) in u.iter().enumerate() {
            if law.expect(|z| cost[z]) > budgets[level] + 1e-12 {
                return Ok(None);
            }
            let c = constrained_additive_capacity(law, d, budgets[level], g, cfg)?;
            worst = worst.max(c.value);
        }
        Ok(Some(worst))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let mut best: Option<(Vec<Pmf>, f64)> = None;
    for start in 0..search.starts.max(1) {
        let mut v = base.clone();
        if start > 0 {
            for level in 0..k {
                let t = rng.gen_range(0.0..0.5);
                let target = Pmf::point_mass(q, rng.gen_range(0..q));
                let cand = v[level].mix(&target, 1.0 - t)?;
                let mut trial = v.clone();
                trial[level] = cand;
                if objective(&trial)?.is_some() {
                    v = trial;
                }
            }
        }
        let mut value = objective(&v)?.expect("starting chain is feasible");
        for _ in 0..search.sweeps {
            let mut improved = false;
            for level in 0..k {
                let gibbs = gibbs_law(&cost, budgets[level])?;
                let mut targets = vec![identity.clone(), gibbs];
                targets.push(Pmf::point_mass(q, rng.gen_range(0..q)));
                for target in &targets {
                    for t in [0.05, 0.2, 0.5] {
                        let mut trial = v.clone();
                        trial[level] = v[level].mix(target, 1.0 - t)?;
                        if let Some(val) = objective(&trial)? {
                            if val < value - 1e-12 {
                                v = trial;
                                value = val;
                                improved = true;
                            }
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
        if best.as_ref().map_or(true, |b| value < b.1 - 1e-12) {
            best = Some((v, value));
        }
    }
    let (v, _) = best.expect("at least one start");
    build_aux_chain(v, g, d, budgets)
}
