use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codebook::{ln_all_miss, log2_codewords, LazyCoveringCodebook};
use super::report::{SimReport, TrialRow};
use super::{joint_type_distance, transpose};
use crate::error::{Error, Result};
use crate::prob::contingency::ConditionalSet;
use crate::prob::info::mutual_information;
use crate::prob::rng::{sample_iid, sample_symbol};
use crate::prob::typical::{counts, is_jointly_typical, is_typical, TypeClassSet};
use crate::prob::{DistortionMeasure, Dmc, JointPmf, Pmf, SeededRng, Typicality};
use crate::solvers::{channel_capacity, rate_distortion, SolverConfig};

/// Parameters of the separate source and channel coding baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    /// Distortion the source code is designed for.
    pub target_distortion: f64,
    /// Source code rate is `R(target) + rate_margin` bits per source letter.
    pub rate_margin: f64,
    /// Rule for source covering; a relative rule keeps the cover nonempty.
    pub source_typicality: Typicality,
    /// Rule for joint-typicality channel decoding.
    pub channel_typicality: Typicality,
}

/// Joint law of a source and its reconstruction under the rate-distortion test
/// channel `W(t|s) ~ q(t) exp(-beta d(s, t))`, with `beta` set so the expected
/// distortion is `target` (`q` is the optimal reconstruction law).
pub fn test_channel(src: &Pmf, d: &DistortionMeasure, target: f64, cfg: &SolverConfig) -> Result<JointPmf> {
    let rd = rate_distortion(src, d, target, cfg)?;
    let q = rd.argument.probs().to_vec();
    let (ns, nt) = (d.source_size(), d.recon_size());
    let joint_at = |beta: f64| -> Vec<f64> {
        let mut out = vec![0.0; ns * nt];
        for s in 0..ns {
            let row: Vec<f64> = (0..nt)
                .map(|t| {
                    let w = if beta.is_infinite() {
                        f64::from(u8::from(d.d(s, t) == 0.0))
                    } else {
                        (-beta * d.d(s, t)).exp()
                    };
                    q[t] * w
                })
                .collect();
            let z: f64 = row.iter().sum();
            for t in 0..nt {
                out[s * nt + t] = if z > 0.0 { src.prob(s) * row[t] / z } else { 0.0 };
            }
        }
        out
    };
    let mean = |p: &[f64]| -> f64 {
        (0..ns * nt).map(|i| p[i] * d.d(i / nt, i % nt)).sum()
    };
    if target == 0.0 || mean(&joint_at(f64::INFINITY)) >= target {
        return JointPmf::from_weights(vec![ns, nt], joint_at(f64::INFINITY));
    }
    if mean(&joint_at(0.0)) <= target {
        return JointPmf::from_weights(vec![ns, nt], joint_at(0.0));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while mean(&joint_at(hi)) > target && hi < 1e12 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(&joint_at(mid)) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    JointPmf::from_weights(vec![ns, nt], joint_at(hi))
}

/// Separate source and channel coding of `n` source letters over `round(kappa n)`
/// channel uses.
///
/// The source code covers the source sequence with a codebook of rate
/// `R(target) + rate_margin`; its index is sent with a channel code of the same
/// size, uniform over the typical set of the capacity-achieving input, decoded by
/// joint typicality. Both codebooks are used through their exact ensemble laws.
/// On a channel decoding error the output is another source codeword, which is
/// uniform over the reconstruction typical set outside the cover of the source.
///
/// `e1` marks an atypical source, `e2` a covering failure, `e3` a channel
/// decoding error. `failed` is `e2` or `e3`.
#[allow(clippy::too_many_arguments)]
pub fn separation_baseline_experiment(
    src: &Pmf,
    d: &DistortionMeasure,
    ch: &Dmc,
    kappa: f64,
    n: usize,
    params: &BaselineParams,
    trials: usize,
    rng: &SeededRng,
    cfg: &SolverConfig,
) -> Result<SimReport> {
    d.check_source(src)?;
    let uses = (kappa * n as f64).round();
    if !(kappa > 0.0) || (uses - kappa * n as f64).abs() > 1e-9 || uses < 1.0 {
        return Err(Error::InvalidArgument(format!("kappa n = {} must be a positive integer", kappa * n as f64)));
    }
    let uses = uses as usize;
    let source_rule = params.source_typicality;
    let channel_rule = params.channel_typicality;

    let rd = rate_distortion(src, d, params.target_distortion, cfg)?;
    let source_joint = test_channel(src, d, params.target_distortion, cfg)?;
    let source_rate = (rd.value + params.rate_margin).max(0.0);
    let cover = LazyCoveringCodebook::new(&source_joint, n, source_rate, source_rule)?;
    let recon_set = TypeClassSet::typical(&source_joint.marginal_axis(1)?, n, source_rule)?;
    let log2_m = log2_codewords(n, source_rate);

    let cap = channel_capacity(ch, cfg)?;
    let input_law = cap.argument.clone();
    let channel_joint = ch.joint(&input_law)?;
    let reverse = transpose(&channel_joint)?;
    let input_set = TypeClassSet::typical(&input_law, uses, channel_rule)?;
    if input_set.is_empty() {
        return Err(Error::EmptyTypicalSet { n: uses, delta: channel_rule.delta() });
    }
    let log2_others = if log2_m < 52.0 {
        (log2_m.exp2() - 1.0).max(0.0).log2()
    } else {
        log2_m
    };

    let rows = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut g = rng.child(trial as u64).generator();
            let s = sample_iid(src, n, &mut g);
            let e1 = !is_typical(&s, src, source_rule);
            let out = cover.encode(&s, &mut g)?;
            let e2 = !out.found;
            let mut e3 = false;
            if log2_m > 0.0 {
                let x = input_set.sample(&mut g)?;
                let y: Vec<usize> = x.iter().map(|a| sample_symbol(ch.row(*a), &mut g)).collect();
                let true_ok = is_jointly_typical(&x, &y, &channel_joint, channel_rule);
                let ln_q = ConditionalSet::jointly_typical(&counts(&y, ch.output_size()), &reverse, channel_rule)?
                    .log_total()
                    - input_set.log_size();
                let none_false = ln_all_miss(log2_others, ln_q.min(0.0)).exp();
                let false_match = g.gen::<f64>() >= none_false;
                e3 = !true_ok || false_match;
            }
            let recon = if e3 {
                wrong_codeword(&s, &source_joint, source_rule, &recon_set, &mut g)?
            } else {
                out.y
            };
            let dist = s.iter().zip(&recon).map(|(a, b)| d.d(*a, *b)).sum::<f64>() / n as f64;
            Ok(TrialRow {
                trial,
                e1,
                e2,
                e3: vec![e3],
                failed: e2 || e3,
                tv: joint_type_distance(&s, &recon, &source_joint),
                distortions: vec![dist],
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let info = mutual_information(&source_joint)?;
    let mut report = SimReport::assemble(
        "separation-baseline",
        rng.seed,
        n,
        source_rule.delta(),
        vec![source_rate, source_rate / kappa, cap.value, info],
        vec![(1, 2, params.target_distortion)],
        rows,
    );
    if log2_m == 0.0 {
        report.degenerate = true;
    }
    if source_rate / kappa > cap.value {
        report
            .notes
            .push(format!("source rate per channel use {} exceeds capacity {}", source_rate / kappa, cap.value));
    }
    Ok(report)
}

/// A codeword that does not cover `s`: uniform on the reconstruction typical set
/// outside the cover, by rejection.
fn wrong_codeword<R: Rng + ?Sized>(
    s: &[usize],
    joint: &JointPmf,
    rule: Typicality,
    set: &TypeClassSet,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut y = set.sample(rng)?;
    for _ in 0..256 {
        if !is_jointly_typical(s, &y, joint, rule) {
            break;
        }
        y = set.sample(rng)?;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_channel_hits_target() {
        let src = Pmf::bernoulli(0.5).unwrap();
        let d = DistortionMeasure::hamming(2);
        let j = test_channel(&src, &d, 0.11, &SolverConfig::default()).unwrap();
        let dist = j.prob(&[0, 1]) + j.prob(&[1, 0]);
        assert!((dist - 0.11).abs() < 1e-9);
        let i = mutual_information(&j).unwrap();
        assert!((i - (1.0 - crate::prob::info::h2(0.11))).abs() < 1e-6);
    }
}
