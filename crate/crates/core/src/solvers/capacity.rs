use super::{argmax, SolverConfig, SolverResult, LOG2E};
use crate::error::Result;
use crate::prob::{Dmc, Pmf};

struct Step {
    lower: f64,
    upper: f64,
    // D(W_x || q) in nats
    div: Vec<f64>,
}

fn evaluate(ch: &Dmc, r: &[f64]) -> Step {
    let ny = ch.output_size();
    let mut q = vec![0.0; ny];
    for (x, rx) in r.iter().enumerate() {
        for (y, w) in ch.row(x).probs().iter().enumerate() {
            q[y] += rx * w;
        }
    }
    let div: Vec<f64> = (0..ch.input_size())
        .map(|x| {
            ch.row(x)
                .probs()
                .iter()
                .zip(&q)
                .filter(|(w, _)| **w > 0.0)
                .map(|(w, qy)| w * (w / qy).ln())
                .sum()
        })
        .collect();
    let lower = r.iter().zip(&div).map(|(a, b)| a * b).sum::<f64>() * LOG2E;
    let upper = div[argmax(&div)] * LOG2E;
    Step {
        lower: lower.max(0.0),
        upper,
        div,
    }
}

fn run(ch: &Dmc, cfg: &SolverConfig, mut trace: Option<&mut Vec<(f64, f64)>>) -> Result<SolverResult> {
    cfg.validate()?;
    let nx = ch.input_size();
    let mut r = vec![1.0 / nx as f64; nx];
    let mut best_r = r.clone();
    let mut best_lower = f64::NEG_INFINITY;
    let mut best_upper = f64::INFINITY;
    for it in 1..=cfg.max_iterations {
        let s = evaluate(ch, &r);
        if let Some(t) = trace.as_deref_mut() {
            t.push((s.lower, s.upper));
        }
        if s.lower > best_lower {
            best_lower = s.lower;
            best_r.clone_from(&r);
        }
        best_upper = best_upper.min(s.upper);
        if best_upper - best_lower <= cfg.tolerance {
            return finish(best_r, best_lower, best_upper, it, true);
        }
        let m = s.div.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (rx, d) in r.iter_mut().zip(&s.div) {
            *rx *= (d - m).exp();
        }
        let total: f64 = r.iter().sum();
        r.iter_mut().for_each(|v| *v /= total);
    }
    finish(best_r, best_lower, best_upper, cfg.max_iterations, false)
}

fn finish(r: Vec<f64>, lower: f64, upper: f64, iterations: usize, converged: bool) -> Result<SolverResult> {
    Ok(SolverResult {
        value: lower,
        argument: Pmf::from_weights(r)?,
        lower_bound: lower,
        upper_bound: upper.max(lower),
        iterations,
        converged,
    })
}

/// Capacity of a memoryless channel by Blahut-Arimoto.
///
/// `value` is the mutual information of the returned input law; `upper_bound`
/// is `max_x D(W_x || q)`, which bounds capacity for any output law `q`.
pub fn channel_capacity(ch: &Dmc, cfg: &SolverConfig) -> Result<SolverResult> {
    run(ch, cfg, None)
}

/// Per-iteration `(lower, upper)` pairs of a Blahut-Arimoto run.
pub fn capacity_trace(ch: &Dmc, cfg: &SolverConfig) -> Result<Vec<(f64, f64)>> {
    let mut t = Vec::new();
    run(ch, cfg, Some(&mut t))?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::info::h2;

    #[test]
    fn closed_forms() {
        let cfg = SolverConfig::default();
        let id = channel_capacity(&Dmc::identity(4), &cfg).unwrap();
        assert!((id.value - 2.0).abs() < 1e-9);
        let bsc = channel_capacity(&Dmc::bsc(0.11).unwrap(), &cfg).unwrap();
        assert!((bsc.value - (1.0 - h2(0.11))).abs() < 1e-9);
        assert!((bsc.value - 0.50008).abs() < 1e-5);
        let bec = channel_capacity(&Dmc::bec(0.3).unwrap(), &cfg).unwrap();
        assert!((bec.value - 0.7).abs() < 1e-6);
        let dead = channel_capacity(&Dmc::constant(3, Pmf::uniform(2)), &cfg).unwrap();
        assert!(dead.value.abs() < 1e-12);
        assert!(bsc.converged && bsc.lower_bound <= bsc.value && bsc.value <= bsc.upper_bound);
    }

    #[test]
    fn asymmetric_channel_lower_bound_is_monotone() {
        let ch = Dmc::from_rows(vec![vec![0.9, 0.1, 0.0], vec![0.2, 0.5, 0.3], vec![0.0, 0.05, 0.95]]).unwrap();
        let t = capacity_trace(&ch, &SolverConfig::default().with_tolerance(1e-10)).unwrap();
        assert!(t.len() > 2);
        for w in t.windows(2) {
            assert!(w[1].0 >= w[0].0 - 1e-14);
        }
        let last = t.last().unwrap();
        assert!(last.1 - last.0 <= 1e-10);
    }

    #[test]
    fn z_channel_matches_closed_form() {
        // Z channel with crossover 0.5: C = log2(1 + (1-p) p^{p/(1-p)}) = log2(1.25)
        let ch = Dmc::from_rows(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let c = channel_capacity(&ch, &SolverConfig::default()).unwrap();
        assert!((c.value - 1.25f64.log2()).abs() < 1e-9);
        assert!((c.argument.prob(1) - 0.4).abs() < 1e-6);
    }
}
