use rayon::prelude::*;

use super::base::{flat_block, BaseJointCode, BlockState, BoundCode};
use super::codebook::LazyCoveringCodebook;
use super::joint_type_distance;
use super::report::{SessionRate, SimReport, TrialRow};
use crate::error::{Error, Result};
use crate::network::{Mode, NetworkSpec};
use crate::prob::info::mutual_information;
use crate::prob::rng::sample_symbol;
use crate::prob::typical::is_jointly_typical;
use crate::prob::{Pmf, SeededRng, Typicality};
use crate::solvers::{channel_capacity, SolverConfig};

/// Runs a base code over `n_prime` blocks, replacing every edge in every session
/// by a simulated channel: the `n_prime` edge inputs are covered by a codebook of
/// rate `I(X_e(t); Y_e(t)) + delta` and the chosen codeword is what the receiver
/// sees.
///
/// `e1` marks a session input sequence that is not typical for its exact law,
/// `e2` a covering failure, `e3` a demanded pair whose source and
/// reconstruction blocks are not jointly typical for the exact code law.
/// Session rates are checked against each edge capacity.
pub fn dnjscc_separation_experiment(
    spec: &NetworkSpec,
    base: &BaseJointCode,
    n_prime: usize,
    delta: f64,
    trials: usize,
    rng: &SeededRng,
) -> Result<SimReport> {
    if spec.mode != Mode::Dnjscc {
        return Err(Error::InvalidSpec("channel-simulation separation needs a dnjscc network".into()));
    }
    let code = BoundCode::new(spec, base)?;
    let exact = code.analyze()?;
    let rule = Typicality::Robust(delta);
    let cfg = SolverConfig::default();

    let mut books = Vec::with_capacity(base.n);
    let mut session_rates = Vec::new();
    for (t, joints) in exact.session_joints.iter().enumerate() {
        let mut row = Vec::with_capacity(joints.len());
        for (l, joint) in joints.iter().enumerate() {
            let info = mutual_information(joint)?;
            let rate = info + delta;
            let cap = channel_capacity(&code.links[l].dmc, &cfg)?;
            session_rates.push(SessionRate {
                link: l,
                session: t + 1,
                information: info,
                rate,
                capacity: cap.value,
                violated: info > cap.upper_bound + 1e-9,
            });
            row.push(LazyCoveringCodebook::new(joint, n_prime, rate, rule)?);
        }
        books.push(row);
    }
    let demanded = code.demanded();
    let indices = demanded
        .iter()
        .map(|(id, _)| spec.source_index(*id))
        .collect::<Result<Vec<_>>>()?;
    let block_law = Pmf::new(spec.joint_source_law.probs().to_vec())?;

    let rows = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut g = rng.child(trial as u64).generator();
            let mut states: Vec<BlockState> = (0..n_prime)
                .map(|_| {
                    let mut src = vec![Vec::with_capacity(base.m); spec.sources.len()];
                    for _ in 0..base.m {
                        let idx = spec.joint_source_law.unflatten(sample_symbol(&block_law, &mut g));
                        for (k, s) in spec.sources.iter().enumerate() {
                            src[k].push(idx[s.component]);
                        }
                    }
                    BlockState { src, y: Vec::new() }
                })
                .collect();
            let (mut e1, mut e2) = (false, false);
            for (t, row) in books.iter().enumerate() {
                let mut outs = Vec::with_capacity(row.len());
                for (l, book) in row.iter().enumerate() {
                    let x: Vec<usize> = states.iter().map(|s| code.link_input(s, l, t + 1)).collect();
                    let out = book.encode(&x, &mut g)?;
                    e1 |= !out.x_typical;
                    e2 |= out.x_typical && !out.found;
                    outs.push(out.y);
                }
                for (v, s) in states.iter_mut().enumerate() {
                    s.y.push(outs.iter().map(|y| y[v]).collect());
                }
            }
            let mut e3 = false;
            let mut tv = 0.0;
            let mut distortions = Vec::with_capacity(demanded.len());
            for ((id, node), k) in demanded.iter().zip(&indices) {
                let joint = &exact.recon_joints[&(*id, *node)];
                let rsize = joint.dims()[1];
                let mut a = Vec::with_capacity(n_prime);
                let mut b = Vec::with_capacity(n_prime);
                let mut dist = 0.0;
                for s in &states {
                    let r = code.decode(s, *id, *node)?;
                    dist += code.block_distortion(*k, &s.src[*k], &r);
                    a.push(code.source_block_index(s, *k));
                    b.push(flat_block(&r, spec.distortion_measures[*k].recon_size()));
                }
                debug_assert!(b.iter().all(|v| *v < rsize));
                e3 |= !is_jointly_typical(&a, &b, joint, rule);
                tv += joint_type_distance(&a, &b, joint);
                distortions.push(dist / n_prime as f64);
            }
            Ok(TrialRow {
                trial,
                e1,
                e2,
                e3: vec![e3],
                failed: e1 || e2 || e3,
                tv: tv / demanded.len().max(1) as f64,
                distortions,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let rates = session_rates.iter().map(|r| r.rate).collect();
    let references = demanded
        .iter()
        .map(|(id, node)| (*id, *node, exact.distortions[&(*id, *node)]))
        .collect();
    let mut report = SimReport::assemble("dnjscc-separation", rng.seed, n_prime, delta, rates, references, rows);
    report.rate_violations = session_rates.iter().filter(|r| r.violated).count();
    report.session_rates = session_rates;
    Ok(report)
}
