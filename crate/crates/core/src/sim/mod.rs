//! Seeded Monte-Carlo runs of the coding constructions at desk-scale block lengths.

mod base;
mod baseline;
mod chansim;
mod codebook;
mod dnjscc;
mod report;
mod unicast;

pub use base::{links, BaseJointCode, BlockState, BoundCode, DecoderTable, EncoderTable, ExactAnalysis, Link};
pub use baseline::{separation_baseline_experiment, test_channel, BaselineParams};
pub use chansim::channel_simulation_experiment;
pub use codebook::{ln_all_miss, log2_codewords, Codebook, CoverOutcome, LazyCoveringCodebook, EXPLICIT_CODEWORD_CAP};
pub use dnjscc::dnjscc_separation_experiment;
pub use report::{DistortionRecord, SessionRate, SimReport, TrialRow};
pub use unicast::{jscmud_superchannel_experiment, weak_false_match_log_probability, WeakTypicality};

use crate::prob::info::total_variation;
use crate::prob::JointPmf;

/// Total-variation distance between the joint type of `(x, y)` and `joint`.
pub fn joint_type_distance(x: &[usize], y: &[usize], joint: &JointPmf) -> f64 {
    let ny = joint.dims()[1];
    let mut emp = vec![0.0; joint.probs().len()];
    let w = 1.0 / x.len().max(1) as f64;
    for (a, b) in x.iter().zip(y) {
        emp[a * ny + b] += w;
    }
    total_variation(&emp, joint.probs())
}

/// The joint law with its two axes swapped.
pub(crate) fn transpose(joint: &JointPmf) -> crate::Result<JointPmf> {
    let (nx, ny) = (joint.dims()[0], joint.dims()[1]);
    let mut probs = vec![0.0; nx * ny];
    for a in 0..nx {
        for b in 0..ny {
            probs[b * nx + a] = joint.probs()[a * ny + b];
        }
    }
    JointPmf::new(vec![ny, nx], probs)
}
