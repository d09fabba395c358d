use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;

use super::base::{flat_block, BaseJointCode, BoundCode};
use super::codebook::{ln_all_miss, log2_codewords};
use super::joint_type_distance;
use super::report::{SimReport, TrialRow};
use crate::error::{Error, Result};
use crate::network::{Mode, NetworkSpec};
use crate::prob::contingency::{for_each_table, log_table_probability, ENUMERATION_CAP};
use crate::prob::info::entropy_of;
use crate::prob::rng::sample_iid;
use crate::prob::typical::{counts, LnFactorial};
use crate::prob::{JointPmf, Pmf, SeededRng};
use crate::solvers::{rate_distortion, SolverConfig};

/// Weak (entropy) typicality over a two-axis law: a sequence is typical when its
/// empirical log-likelihood per letter is within `delta` bits of the entropy.
#[derive(Debug, Clone)]
pub struct WeakTypicality {
    joint: JointPmf,
    a_law: Vec<f64>,
    b_law: Vec<f64>,
    h_a: f64,
    h_b: f64,
    h_ab: f64,
    delta: f64,
}

fn weak_ok(seq: impl Iterator<Item = usize>, probs: &[f64], h: f64, delta: f64) -> bool {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in seq {
        let p = probs[v];
        if p <= 0.0 {
            return false;
        }
        sum -= p.log2();
        n += 1;
    }
    n > 0 && (sum / n as f64 - h).abs() <= delta
}

impl WeakTypicality {
    pub fn new(joint: &JointPmf, delta: f64) -> Result<Self> {
        if joint.rank() != 2 {
            return Err(Error::Dimension("weak typicality needs a two-axis joint law".into()));
        }
        let a_law = joint.marginal_axis(0)?.probs().to_vec();
        let b_law = joint.marginal_axis(1)?.probs().to_vec();
        Ok(Self {
            h_a: entropy_of(&a_law),
            h_b: entropy_of(&b_law),
            h_ab: entropy_of(joint.probs()),
            joint: joint.clone(),
            a_law,
            b_law,
            delta,
        })
    }

    pub fn a_typical(&self, a: &[usize]) -> bool {
        weak_ok(a.iter().copied(), &self.a_law, self.h_a, self.delta)
    }

    pub fn b_typical(&self, b: &[usize]) -> bool {
        weak_ok(b.iter().copied(), &self.b_law, self.h_b, self.delta)
    }

    pub fn jointly_typical(&self, a: &[usize], b: &[usize]) -> bool {
        let nb = self.b_law.len();
        self.a_typical(a)
            && self.b_typical(b)
            && weak_ok(a.iter().zip(b).map(|(x, y)| x * nb + y), self.joint.probs(), self.h_ab, self.delta)
    }
}

/// Natural log of the probability that a sequence drawn i.i.d. from the `a`
/// marginal is weakly jointly typical with a fixed `b` whose letter counts are
/// `b_counts`. Enumerates joint types.
pub fn weak_false_match_log_probability(b_counts: &[usize], w: &WeakTypicality) -> Result<f64> {
    let n: usize = b_counts.iter().sum();
    let (na, nb) = (w.a_law.len(), w.b_law.len());
    if n == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let b_ll: f64 = b_counts
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(b, c)| if w.b_law[b] > 0.0 { -(*c as f64) * w.b_law[b].log2() } else { f64::INFINITY })
        .sum();
    if !((b_ll / n as f64 - w.h_b).abs() <= w.delta) {
        return Ok(f64::NEG_INFINITY);
    }
    let ranges: Vec<Vec<(usize, usize)>> = (0..nb)
        .map(|b| {
            (0..na)
                .map(|a| if w.joint.probs()[a * nb + b] > 0.0 { (0, b_counts[b]) } else { (1, 0) })
                .collect()
        })
        .collect();
    let a_law = Pmf::new(w.a_law.clone())?;
    let lnf = LnFactorial::new(n);
    let log_a: Vec<f64> = w.a_law.iter().map(|p| p.log2()).collect();
    let log_ab: Vec<f64> = w.joint.probs().iter().map(|p| p.log2()).collect();
    let (mut acc, mut max) = (Vec::new(), f64::NEG_INFINITY);
    for_each_table(b_counts, &ranges, ENUMERATION_CAP, |table| {
        let (mut la, mut lab) = (0.0, 0.0);
        for (b, row) in table.iter().enumerate() {
            for (a, c) in row.iter().enumerate() {
                if *c > 0 {
                    la -= *c as f64 * log_a[a];
                    lab -= *c as f64 * log_ab[a * nb + b];
                }
            }
        }
        let nf = n as f64;
        if (la / nf - w.h_a).abs() <= w.delta && (lab / nf - w.h_ab).abs() <= w.delta {
            let lp = log_table_probability(table, &a_law, &lnf);
            max = f64::max(max, lp);
            acc.push(lp);
        }
    })?;
    if acc.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(max + acc.iter().map(|v| (v - max).exp()).sum::<f64>().ln())
}

/// Separation over a unicast multiuser network through the superchannel of a
/// base code: each source's message picks one of `2^(m n' R_i)` codewords drawn
/// i.i.d. from the source law, with `R_i = R_i(D_i + epsilon) - delta`. The
/// codeword runs through the base code block by block over the true channels and
/// the destination decodes the unique codeword weakly jointly typical (per
/// super-letter, tolerance `delta`) with its reconstruction blocks under the exact
/// code law.
///
/// `e1` marks an atypical codeword, `e2` a true pair that is not jointly typical,
/// `e3[i]` a competing codeword of source `i` that is jointly typical with the
/// received blocks. Competing codewords are used through their exact ensemble law.
#[allow(clippy::too_many_arguments)]
pub fn jscmud_superchannel_experiment(
    spec: &NetworkSpec,
    base: &BaseJointCode,
    target_distortions: &[f64],
    epsilon: f64,
    delta: f64,
    n_prime: usize,
    trials: usize,
    rng: &SeededRng,
    cfg: &SolverConfig,
) -> Result<SimReport> {
    if spec.mode != Mode::Jscmud {
        return Err(Error::InvalidSpec("superchannel separation needs a jscmud network".into()));
    }
    if target_distortions.len() != spec.sources.len() {
        return Err(Error::Dimension(format!(
            "{} target distortions for {} sources",
            target_distortions.len(),
            spec.sources.len()
        )));
    }
    let code = BoundCode::new(spec, base)?;
    let exact = code.analyze()?;
    let demanded = code.demanded();

    struct Plan {
        id: usize,
        node: usize,
        k: usize,
        log2_others: f64,
        weak: WeakTypicality,
    }
    let mut plans = Vec::with_capacity(demanded.len());
    let mut rates = Vec::with_capacity(demanded.len());
    for (id, node) in &demanded {
        let k = spec.source_index(*id)?;
        let law = spec.source_law(k)?;
        let r = rate_distortion(&law, &spec.distortion_measures[k], target_distortions[k] + epsilon, cfg)?;
        let rate = (r.value - delta).max(0.0);
        let log2_m = log2_codewords(base.m * n_prime, rate);
        let log2_others = if log2_m == 0.0 {
            f64::NEG_INFINITY
        } else if log2_m < 52.0 {
            (log2_m.exp2() - 1.0).log2()
        } else {
            log2_m
        };
        rates.push(rate);
        plans.push(Plan {
            id: *id,
            node: *node,
            k,
            log2_others,
            weak: WeakTypicality::new(&exact.recon_joints[&(*id, *node)], delta)?,
        });
    }
    let ns = spec.sources.len();

    let rows = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut g = rng.child(trial as u64).generator();
            let words: Vec<Vec<usize>> = (0..ns)
                .map(|k| {
                    let law = spec.source_law(k)?;
                    Ok(sample_iid(&law, base.m * n_prime, &mut g))
                })
                .collect::<Result<_>>()?;
            let mut a = vec![Vec::with_capacity(n_prime); plans.len()];
            let mut b = vec![Vec::with_capacity(n_prime); plans.len()];
            let mut dist = vec![0.0; plans.len()];
            for v in 0..n_prime {
                let src: Vec<Vec<usize>> = words.iter().map(|w| w[v * base.m..(v + 1) * base.m].to_vec()).collect();
                let state = code.run_block(src, &mut g);
                for (i, p) in plans.iter().enumerate() {
                    let r = code.decode(&state, p.id, p.node)?;
                    dist[i] += code.block_distortion(p.k, &state.src[p.k], &r);
                    a[i].push(code.source_block_index(&state, p.k));
                    b[i].push(flat_block(&r, spec.distortion_measures[p.k].recon_size()));
                }
            }
            let (mut e1, mut e2) = (false, false);
            let mut e3 = vec![false; plans.len()];
            let mut failed = false;
            let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
            let mut tv = 0.0;
            for (i, p) in plans.iter().enumerate() {
                e1 |= !p.weak.a_typical(&a[i]);
                let true_ok = p.weak.jointly_typical(&a[i], &b[i]);
                e2 |= !true_ok;
                if p.log2_others > f64::NEG_INFINITY {
                    let bc = counts(&b[i], p.weak.b_law.len());
                    let ln_q = match cache.get(&bc) {
                        Some(v) => *v,
                        None => {
                            let v = weak_false_match_log_probability(&bc, &p.weak)?;
                            cache.insert(bc, v);
                            v
                        }
                    };
                    let none = ln_all_miss(p.log2_others, ln_q.min(0.0)).exp();
                    e3[i] = g.gen::<f64>() >= none;
                    failed |= !true_ok || e3[i];
                }
                tv += joint_type_distance(&a[i], &b[i], &exact.recon_joints[&(p.id, p.node)]);
            }
            Ok(TrialRow {
                trial,
                e1,
                e2,
                e3,
                failed,
                tv: tv / plans.len().max(1) as f64,
                distortions: dist.iter().map(|d| d / n_prime as f64).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let references = plans
        .iter()
        .map(|p| (p.id, p.node, exact.distortions[&(p.id, p.node)]))
        .collect();
    let mut report = SimReport::assemble("jscmud-superchannel", rng.seed, n_prime, delta, rates, references, rows);
    if plans.iter().any(|p| p.log2_others == f64::NEG_INFINITY) {
        report.degenerate = true;
        report
            .notes
            .push("a message set has a single codeword, so its decoding cannot fail".into());
    }
    Ok(report)
}
