use rayon::prelude::*;

use super::codebook::LazyCoveringCodebook;
use super::report::{SimReport, TrialRow};
use super::joint_type_distance;
use crate::error::Result;
use crate::prob::info::mutual_information;
use crate::prob::rng::sample_iid;
use crate::prob::{Dmc, Pmf, SeededRng, Typicality};

/// Simulates one channel use per letter by covering: `x` is drawn i.i.d. from
/// `input_law` and replaced by the first codeword jointly typical with it, from a
/// codebook of rate `I(X; Y) + rate_margin` over the output law.
///
/// Typicality is `Robust(delta)`. `e1` marks atypical `x`, `e2` a covering failure
/// for typical `x`; `failed` is their union. `tv` is the distance between the
/// joint type of `(x, y)` and `P(X, Y)`.
pub fn channel_simulation_experiment(
    ch: &Dmc,
    input_law: &Pmf,
    n_prime: usize,
    delta: f64,
    rate_margin: f64,
    trials: usize,
    rng: &SeededRng,
) -> Result<SimReport> {
    let joint = ch.joint(input_law)?;
    let info = mutual_information(&joint)?;
    let rate = (info + rate_margin).max(0.0);
    let rule = Typicality::Robust(delta);
    let book = LazyCoveringCodebook::new(&joint, n_prime, rate, rule)?;
    let rows = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut g = rng.child(t as u64).generator();
            let x = sample_iid(input_law, n_prime, &mut g);
            let out = book.encode(&x, &mut g)?;
            let e1 = !out.x_typical;
            let e2 = out.x_typical && !out.found;
            Ok(TrialRow {
                trial: t,
                e1,
                e2,
                e3: Vec::new(),
                failed: e1 || !out.found,
                tv: joint_type_distance(&x, &out.y, &joint),
                distortions: Vec::new(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = SimReport::assemble("channel-simulation", rng.seed, n_prime, delta, vec![rate], Vec::new(), rows);
    if rate_margin <= 0.0 {
        report
            .notes
            .push(format!("rate margin {rate_margin} is not positive; covering is expected to fail"));
    }
    if book.log2_codewords() == 0.0 {
        report.degenerate = true;
    }
    Ok(report)
}
