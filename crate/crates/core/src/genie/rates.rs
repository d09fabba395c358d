use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::chain::AuxChain;
use super::orders::Orders;
use crate::error::{Error, Result};
use crate::prob::info::conditional_mutual_information;
use crate::prob::{JointPmf, Pmf};
use crate::prob::contingency::ENUMERATION_CAP;
use crate::solvers::{constrained_additive_capacity, SolverConfig, SolverResult};

/// Extra rates `R*[i][j]` (bits per source sample) a genie network must carry,
/// `None` where the entry is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenieRateMatrix {
    #[serde(with = "diamond")]
    pub entries: Vec<Vec<Option<f64>>>,
    /// False when any entry came from a solve that missed its tolerance.
    pub converged: bool,
}

mod diamond {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Cell {
        Value(f64),
        Tag(String),
    }

    pub fn serialize<S: Serializer>(rows: &[Vec<Option<f64>>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let cells: Vec<Vec<Cell>> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| match v {
                        Some(x) => Cell::Value(*x),
                        None => Cell::Tag("diamond".into()),
                    })
                    .collect()
            })
            .collect();
        cells.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<Option<f64>>>, D::Error> {
        let cells: Vec<Vec<Cell>> = Vec::deserialize(d)?;
        cells
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|c| match c {
                        Cell::Value(x) => Ok(Some(x)),
                        Cell::Tag(t) if t == "diamond" => Ok(None),
                        Cell::Tag(t) => Err(serde::de::Error::custom(format!(
                            "rate entry must be a number or \"diamond\", got \"{t}\""
                        ))),
                    })
                    .collect()
            })
            .collect()
    }
}

impl GenieRateMatrix {
    fn undefined(sources: usize, nodes: usize) -> Self {
        Self {
            entries: vec![vec![None; nodes]; sources],
            converged: true,
        }
    }

    pub fn defined_count(&self) -> usize {
        self.entries.iter().flatten().filter(|v| v.is_some()).count()
    }
}

/// `R*[i][O_i(j)] = C(D_{i,O_i(j)}, U_{i,O_i(j)})` for sources with more than one
/// slot; `chains[i]` must be present for those and match the slot distortions.
pub fn genie_rate_matrix(
    orders: &Orders,
    chains: &[Option<AuxChain>],
    nodes: usize,
    cfg: &SolverConfig,
) -> Result<GenieRateMatrix> {
    if chains.len() != orders.per_source.len() {
        return Err(Error::Dimension(format!(
            "{} chains for {} sources",
            chains.len(),
            orders.per_source.len()
        )));
    }
    let rows: Vec<(Vec<Option<f64>>, bool)> = (0..chains.len())
        .into_par_iter()
        .map(|i| {
            let mut row = vec![None; nodes];
            let slots = &orders.per_source[i];
            if slots.len() <= 1 {
                return Ok((row, true));
            }
            let chain = chains[i].as_ref().ok_or_else(|| {
                Error::InvalidArgument(format!("source {} has {} slots but no aux chain", i + 1, slots.len()))
            })?;
            check_chain(chain, slots.iter().map(|s| s.distortion), i)?;
            let mut converged = true;
            for (j, slot) in slots.iter().enumerate() {
                let r = capacity(chain, slot.distortion, j, cfg)
                    .map_err(|e| e.in_context(format!("genie entry ({}, slot {})", i + 1, j + 1)))?;
                converged &= r.converged;
                for node in &slot.nodes {
                    if *node == 0 || *node > nodes {
                        return Err(Error::Dimension(format!("node {node} outside 1..{nodes}")));
                    }
                    row[node - 1] = Some(r.value);
                }
            }
            Ok((row, converged))
        })
        .collect::<Result<_>>()?;
    let converged = rows.iter().all(|r| r.1);
    Ok(GenieRateMatrix {
        entries: rows.into_iter().map(|r| r.0).collect(),
        converged,
    })
}

fn check_chain(chain: &AuxChain, distortions: impl Iterator<Item = f64>, source: usize) -> Result<()> {
    let d: Vec<f64> = distortions.collect();
    if chain.len() != d.len() {
        return Err(Error::Dimension(format!(
            "source {} has {} slots but its chain has {} levels",
            source + 1,
            d.len(),
            chain.len()
        )));
    }
    for (k, (e, b)) in chain.expected.iter().zip(&d).enumerate() {
        if *e > b + 1e-12 {
            return Err(Error::ChainBudget { k: k + 1, expected: *e, budget: *b });
        }
    }
    Ok(())
}

/// `C(budget, U_level)` of a chain, in bits.
fn capacity(chain: &AuxChain, budget: f64, level: usize, cfg: &SolverConfig) -> Result<SolverResult> {
    constrained_additive_capacity(&chain.u_laws[level], &chain.measure, budget, &chain.group, cfg)
}

/// The squared-error specialization: every defined entry is exactly half a bit.
pub fn quadratic_genie_rate_matrix(orders: &Orders, nodes: usize) -> Result<GenieRateMatrix> {
    let mut m = GenieRateMatrix::undefined(orders.per_source.len(), nodes);
    for (i, slots) in orders.per_source.iter().enumerate() {
        if slots.len() <= 1 {
            continue;
        }
        for node in slots.iter().flat_map(|s| &s.nodes) {
            if *node == 0 || *node > nodes {
                return Err(Error::Dimension(format!("node {node} outside 1..{nodes}")));
            }
            m.entries[i][node - 1] = Some(0.5);
        }
    }
    Ok(m)
}

/// Total genie throughput, counting a common link to `k` nodes as `k` links:
/// `sum_i sum_j R*[i][O_i(j)] * (nodes in slots j..)`.
pub fn aggregate_throughput(m: &GenieRateMatrix, orders: &Orders) -> Result<f64> {
    if m.entries.len() != orders.per_source.len() {
        return Err(Error::Dimension("rate matrix and orders disagree on sources".into()));
    }
    let mut total = 0.0;
    for (i, slots) in orders.per_source.iter().enumerate() {
        for (j, slot) in slots.iter().enumerate() {
            let node = slot.nodes[0];
            if let Some(r) = m.entries[i].get(node - 1).copied().flatten() {
                total += r * orders.reach(i, j) as f64;
            }
        }
    }
    Ok(total)
}

/// Degraded-message-set rates of one source at block length one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmsRates {
    /// `R^c_k`, possibly negative.
    pub rates: Vec<f64>,
    /// `I(S+U_1; S)` and `I(S+U_k; S | S+U_{k-1})`.
    pub information: Vec<f64>,
    /// `C(D_k, U_k)`.
    pub capacities: Vec<f64>,
    /// Levels (1-based) whose rate is negative.
    pub negative: Vec<usize>,
    /// `I(S+U_K, ..., S+U_1; S)` from the full joint law.
    pub direct_information: f64,
    /// `|sum_k (R^c_k + C(D_k, U_k)) - direct_information|`.
    pub telescoping_error: f64,
    pub converged: bool,
}

/// `R^c_1 = I(S+U_1; S) - C(D_1, U_1)` and
/// `R^c_k = I(S+U_k; S | S+U_{k-1}) - C(D_k, U_k)`, with the chain budgets as `D`.
pub fn dms_rates(src: &Pmf, chain: &AuxChain, cfg: &SolverConfig) -> Result<DmsRates> {
    let k = chain.len();
    let mut information = Vec::with_capacity(k);
    for level in 0..k {
        let v = if level == 0 {
            let j = level_joint(src, chain, 0, None)?;
            conditional_mutual_information(&j, &[1], &[0], &[])?
        } else {
            let j = level_joint(src, chain, level, None)?;
            conditional_mutual_information(&j, &[1], &[0], &[2])?
        };
        information.push(v);
    }
    let results: Vec<SolverResult> = (0..k)
        .into_par_iter()
        .map(|level| capacity(chain, chain.budgets[level], level, cfg))
        .collect::<Result<_>>()?;
    let capacities: Vec<f64> = results.iter().map(|r| r.value).collect();
    let rates: Vec<f64> = information.iter().zip(&capacities).map(|(i, c)| i - c).collect();
    let negative = rates
        .iter()
        .enumerate()
        .filter(|(_, r)| **r < 0.0)
        .map(|(l, _)| l + 1)
        .collect();
    let full = full_joint(src, chain)?;
    let rest: Vec<usize> = (1..=k).collect();
    let direct_information = conditional_mutual_information(&full, &[0], &rest, &[])?;
    let telescoped: f64 = information.iter().sum();
    Ok(DmsRates {
        rates,
        information,
        capacities,
        negative,
        direct_information,
        telescoping_error: (telescoped - direct_information).abs(),
        converged: results.iter().all(|r| r.converged),
    })
}

/// Law of `(S, S+U_level, S+U_{level-1}, extra)` where the third axis is present
/// for `level > 0` and `extra` optionally appends `Ŝ` drawn from `P(Ŝ | S)`.
pub(crate) fn level_joint(
    src: &Pmf,
    chain: &AuxChain,
    level: usize,
    recon: Option<&crate::prob::Dmc>,
) -> Result<JointPmf> {
    let g = &chain.group;
    let q = g.order();
    if src.alphabet_size() != q {
        return Err(Error::Dimension(format!(
            "source has {} letters, chain group has order {q}",
            src.alphabet_size()
        )));
    }
    let u = chain.u_laws[level].probs();
    let v_prev = (level > 0).then(|| chain.v_laws[level - 1].probs());
    let nr = recon.map_or(1, |w| w.output_size());
    let mut dims = vec![q, q];
    if level > 0 {
        dims.push(q);
    }
    if recon.is_some() {
        dims.push(nr);
    }
    let stride_prev = if level > 0 { q } else { 1 };
    let mut probs = vec![0.0; dims.iter().product()];
    for s in 0..q {
        let ps = src.prob(s);
        if ps == 0.0 {
            continue;
        }
        for z in 0..q {
            let pz = ps * u[g.sub(z, s)];
            if pz == 0.0 {
                continue;
            }
            for zp in 0..stride_prev {
                let pzp = match v_prev {
                    Some(v) => pz * v[g.sub(zp, z)],
                    None => pz,
                };
                if pzp == 0.0 {
                    continue;
                }
                for r in 0..nr {
                    let p = match recon {
                        Some(w) => pzp * w.prob(s, r),
                        None => pzp,
                    };
                    let idx = ((s * q + z) * stride_prev + zp) * nr + r;
                    probs[idx] = p;
                }
            }
        }
    }
    JointPmf::new(dims, probs)
}

/// Law of `(S, S+U_1, ..., S+U_K)`.
fn full_joint(src: &Pmf, chain: &AuxChain) -> Result<JointPmf> {
    let g = &chain.group;
    let q = g.order();
    let k = chain.len();
    let size = (q as u128).saturating_pow(k as u32 + 1);
    if size > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            what: "aux chain joint law".into(),
            needed: size,
            cap: ENUMERATION_CAP,
        });
    }
    // axes: S, Z_1, ..., Z_K; Z_K = S + V_K and Z_k = Z_{k+1} + V_k
    let dims = vec![q; k + 1];
    let mut probs = vec![0.0; size as usize];
    let mut digits = vec![0usize; k + 1];
    for (flat, slot) in probs.iter_mut().enumerate() {
        let mut rest = flat;
        for a in (0..=k).rev() {
            digits[a] = rest % q;
            rest /= q;
        }
        let s = digits[0];
        let mut p = src.prob(s) * chain.v_laws[k - 1].prob(g.sub(digits[k], s));
        for level in (1..k).rev() {
            if p == 0.0 {
                break;
            }
            p *= chain.v_laws[level - 1].prob(g.sub(digits[level], digits[level + 1]));
        }
        *slot = p;
    }
    JointPmf::new(dims, probs)
}
