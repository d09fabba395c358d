use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{SolverConfig, SolverResult, LOG2E};
use crate::error::{Error, Result};
use crate::prob::{DistortionMeasure, FiniteAbelianGroup, Pmf};

/// Group convolution and correlation, through the FFT when the group is cyclic.
#[derive(Clone)]
struct GroupOps {
    group: FiniteAbelianGroup,
    fft: Option<(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
}

impl GroupOps {
    fn new(group: &FiniteAbelianGroup) -> Self {
        let n = group.order();
        let fft = (n >= 32 && *group == FiniteAbelianGroup::cyclic(n)).then(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        });
        Self {
            group: group.clone(),
            fft,
        }
    }

    fn spectrum(&self, a: &[f64]) -> Vec<Complex<f64>> {
        let (fwd, _) = self.fft.as_ref().expect("fft planned");
        let mut buf: Vec<Complex<f64>> = a.iter().map(|v| Complex::new(*v, 0.0)).collect();
        fwd.process(&mut buf);
        buf
    }

    fn inverse(&self, mut buf: Vec<Complex<f64>>) -> Vec<f64> {
        let (_, inv) = self.fft.as_ref().expect("fft planned");
        inv.process(&mut buf);
        let n = buf.len() as f64;
        buf.into_iter().map(|c| c.re / n).collect()
    }

    /// `out[y] = sum_x a[x] b[y - x]`.
    fn convolve(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        if self.fft.is_some() {
            let fa = self.spectrum(a);
            let fb = self.spectrum(b);
            return self.inverse(fa.iter().zip(&fb).map(|(x, y)| x * y).collect());
        }
        let n = a.len();
        let mut out = vec![0.0; n];
        for (x, ax) in a.iter().enumerate() {
            if *ax == 0.0 {
                continue;
            }
            for (z, bz) in b.iter().enumerate() {
                out[self.group.add(x, z)] += ax * bz;
            }
        }
        out
    }

    /// `out[x] = sum_z a[z] b[x + z]`.
    fn correlate(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        if self.fft.is_some() {
            let fa = self.spectrum(a);
            let fb = self.spectrum(b);
            return self.inverse(fa.iter().zip(&fb).map(|(x, y)| x.conj() * y).collect());
        }
        let n = a.len();
        (0..n)
            .map(|x| {
                a.iter()
                    .enumerate()
                    .filter(|(_, az)| **az != 0.0)
                    .map(|(z, az)| az * b[self.group.add(x, z)])
                    .sum()
            })
            .collect()
    }
}

/// The additive-noise channel `Y = X + N` on a finite Abelian group with an
/// input cost given by a difference distortion measure.
#[derive(Clone)]
pub struct AdditiveChannel {
    ops: GroupOps,
    noise: Vec<f64>,
    cost: Vec<f64>,
    noise_entropy: f64,
}

/// State of a constrained Blahut-Arimoto run, reusable as a warm start.
#[derive(Debug, Clone)]
pub(crate) struct AdditiveSolution {
    pub result: SolverResult,
    pub input: Vec<f64>,
    /// `ln q(y)` for the output law of `input`.
    pub log_output: Vec<f64>,
}

impl AdditiveChannel {
    pub fn new(noise: &Pmf, d: &DistortionMeasure, g: &FiniteAbelianGroup) -> Result<Self> {
        let cost = d.require_difference("additive-noise capacity")?.to_vec();
        if cost.len() != g.order() || noise.alphabet_size() != g.order() {
            return Err(Error::Dimension(format!(
                "noise law ({}) and cost ({}) must both match the group order {}",
                noise.alphabet_size(),
                cost.len(),
                g.order()
            )));
        }
        Ok(Self::from_parts(GroupOps::new(g), noise.probs().to_vec(), cost))
    }

    fn from_parts(ops: GroupOps, noise: Vec<f64>, cost: Vec<f64>) -> Self {
        let noise_entropy = -noise
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>();
        Self {
            ops,
            noise,
            cost,
            noise_entropy,
        }
    }

    pub(crate) fn with_noise(&self, noise: Vec<f64>) -> Self {
        Self::from_parts(self.ops.clone(), noise, self.cost.clone())
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    /// `D(W_x || q)` in nats for every input `x`, and `ln q`.
    fn divergences(&self, r: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let q = self.ops.convolve(r, &self.noise);
        let log_q: Vec<f64> = q.iter().map(|v| v.max(1e-300).ln()).collect();
        let corr = self.ops.correlate(&self.noise, &log_q);
        let div = corr.iter().map(|c| -self.noise_entropy - c).collect();
        (div, log_q)
    }

    /// Gradient of `I(X; X + N)` with respect to the noise law at fixed input
    /// law `r`, in nats: `ln P_N(z) - sum_x r(x) ln q(x + z)`.
    pub(crate) fn noise_gradient(&self, r: &[f64], log_q: &[f64]) -> Vec<f64> {
        let corr = self.ops.correlate(r, log_q);
        self.noise
            .iter()
            .zip(&corr)
            .map(|(p, c)| p.max(1e-300).ln() - c)
            .collect()
    }

    /// Tilts `log_w` by `-s c` with the smallest `s >= 0` meeting `E c <= budget`.
    pub(crate) fn tilt(&self, log_w: &[f64], budget: f64) -> (Vec<f64>, f64) {
        let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let base: Vec<f64> = log_w.iter().map(|l| l - m).collect();
        // law, mean cost and cost variance under tilt s
        let eval = |s: f64| -> (Vec<f64>, f64, f64) {
            let t: Vec<f64> = base.iter().zip(&self.cost).map(|(l, c)| l - s * c).collect();
            let mx = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut e: Vec<f64> = t.iter().map(|v| (v - mx).exp()).collect();
            let z: f64 = e.iter().sum();
            e.iter_mut().for_each(|v| *v /= z);
            let mean: f64 = e.iter().zip(&self.cost).map(|(a, c)| a * c).sum();
            let var: f64 = e.iter().zip(&self.cost).map(|(a, c)| a * (c - mean).powi(2)).sum();
            (e, mean, var)
        };
        let (r0, mean0, _) = eval(0.0);
        if mean0 <= budget {
            return (r0, 0.0);
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while eval(hi).1 > budget && hi < 1e300 {
            lo = hi;
            hi *= 4.0;
        }
        // safeguarded Newton on E_s c = budget, which is decreasing in s
        let mut s = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (_, mean, var) = eval(s);
            if mean > budget {
                lo = s;
            } else {
                hi = s;
            }
            if hi - lo <= 1e-14 * hi || (mean - budget).abs() <= 1e-15 * budget.max(1e-300) {
                break;
            }
            let newton = s + (mean - budget) / var.max(1e-300);
            s = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        let (r, mean, _) = eval(s);
        if mean <= budget {
            (r, s)
        } else {
            (eval(hi).0, hi)
        }
    }

    /// `min_{s >= 0} s D + max_x (div_x - s c_x)`: an upper bound on the
    /// constrained capacity for any output law, in nats.
    fn dual_upper(&self, div: &[f64], budget: f64) -> f64 {
        let f = |s: f64| {
            div.iter()
                .zip(&self.cost)
                .map(|(d, c)| d - s * c)
                .fold(f64::NEG_INFINITY, f64::max)
                + s * budget
        };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while f(2.0 * hi) < f(hi) && hi < 1e300 {
            hi *= 2.0;
        }
        hi *= 2.0;
        // f is convex and piecewise linear; golden-section on the bracket
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..120 {
            let a = hi - phi * (hi - lo);
            let b = lo + phi * (hi - lo);
            if f(a) <= f(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        f(0.0).min(f(0.5 * (lo + hi)))
    }

    pub(crate) fn solve_from(&self, start: Option<&[f64]>, budget: f64, cfg: &SolverConfig) -> Result<AdditiveSolution> {
        cfg.validate()?;
        let min_cost = self.cost.iter().copied().fold(f64::INFINITY, f64::min);
        if !(budget >= min_cost) {
            return Err(Error::Infeasible(format!(
                "input cost budget {budget} is below the cheapest letter cost {min_cost}"
            )));
        }
        let n = self.cost.len();
        let init = match start {
            Some(r) => r.iter().map(|v| v.max(1e-300).ln()).collect::<Vec<_>>(),
            None => vec![0.0; n],
        };
        let (mut r, _) = self.tilt(&init, budget);
        let mut best_lower = f64::NEG_INFINITY;
        let mut best_upper = f64::INFINITY;
        let mut best_r = r.clone();
        let mut best_log_q = Vec::new();
        let mut iterations = 0;
        let mut converged = false;
        // over-relaxed steps r <- r exp(mu D_x); a step that lowers I(r) is
        // undone and retried with the plain update mu = 1, which never does
        let mut mu = 1.0_f64;
        let mut anchor: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        while iterations < cfg.max_iterations {
            iterations += 1;
            let (mut div, log_q) = self.divergences(&r);
            let lower = r.iter().zip(&div).map(|(a, b)| a * b).sum::<f64>().max(0.0) * LOG2E;
            if let Some((ar, adiv, alower)) = anchor.take() {
                if lower < alower && mu > 1.0 {
                    r = ar;
                    div = adiv;
                    mu = 1.0;
                    let log_w: Vec<f64> = r.iter().zip(&div).map(|(a, d)| a.max(1e-300).ln() + d).collect();
                    anchor = Some((r.clone(), div, alower));
                    r = self.tilt(&log_w, budget).0;
                    continue;
                }
                mu = (mu * 1.5).min(64.0);
            }
            if lower > best_lower {
                best_lower = lower;
                best_r.clone_from(&r);
                best_log_q = log_q;
            }
            best_upper = best_upper.min(self.dual_upper(&div, budget) * LOG2E);
            if best_upper - best_lower <= cfg.tolerance {
                converged = true;
                break;
            }
            let log_w: Vec<f64> = r
                .iter()
                .zip(&div)
                .map(|(a, d)| a.max(1e-300).ln() + mu * d)
                .collect();
            anchor = Some((r.clone(), div, lower));
            r = self.tilt(&log_w, budget).0;
        }
        if best_log_q.is_empty() {
            best_log_q = self.divergences(&best_r).1;
        }
        let upper = best_upper.max(best_lower);
        Ok(AdditiveSolution {
            result: SolverResult {
                value: best_lower,
                argument: Pmf::from_weights(best_r.clone())?,
                lower_bound: best_lower,
                upper_bound: upper,
                iterations,
                converged,
            },
            input: best_r,
            log_output: best_log_q,
        })
    }
}

/// `C(D, N)`: capacity of `Y = X + N` with `X` independent of `N` and `E d(X) <= D`,
/// in bits.
///
/// Blahut-Arimoto with the cost handled by exponential tilting at every step:
/// the multiplier is re-solved each iteration so the iterate always meets the
/// budget. The upper bound is the Lagrangian dual `min_s s D + max_x (D_x - s c_x)`.
pub fn constrained_additive_capacity(
    noise: &Pmf,
    d: &DistortionMeasure,
    budget: f64,
    g: &FiniteAbelianGroup,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    let ch = AdditiveChannel::new(noise, d, g)?;
    Ok(ch.solve_from(None, budget, cfg)?.result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::info::h2;
    use crate::solvers::{gibbs_law, quadratic_grid};

    #[test]
    fn trivial_noises() {
        let g = FiniteAbelianGroup::cyclic(4);
        let d = DistortionMeasure::hamming(4);
        let cfg = SolverConfig::default();
        let c = constrained_additive_capacity(&Pmf::uniform(4), &d, 0.5, &g, &cfg).unwrap();
        assert!(c.value.abs() < 1e-12);
        let z2 = FiniteAbelianGroup::cyclic(2);
        let h = DistortionMeasure::hamming(2);
        let c = constrained_additive_capacity(&Pmf::point_mass(2, 0), &h, 0.5, &z2, &cfg).unwrap();
        assert!((c.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn binary_cost_constrained_matches_grid() {
        // C(D, Bern(p)) = max_{a <= D} h(a * p) - h(p) on Z_2 with Hamming cost
        let z2 = FiniteAbelianGroup::cyclic(2);
        let h = DistortionMeasure::hamming(2);
        let cfg = SolverConfig::default();
        for (budget, p) in [(0.3, 0.26), (0.2, 0.2), (0.1, 0.05)] {
            let c = constrained_additive_capacity(&Pmf::bernoulli(p).unwrap(), &h, budget, &z2, &cfg).unwrap();
            let grid = (0..=2000)
                .map(|k| budget * k as f64 / 2000.0)
                .map(|a| h2(a * (1.0 - p) + (1.0 - a) * p) - h2(p))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((c.value - grid).abs() < 1e-6, "{budget} {p}: {} vs {grid}", c.value);
            assert!(c.converged);
        }
    }

    #[test]
    fn fft_and_table_paths_agree() {
        let g = FiniteAbelianGroup::cyclic(40);
        let ops = GroupOps::new(&g);
        assert!(ops.fft.is_some());
        let table = GroupOps { group: g.clone(), fft: None };
        let a: Vec<f64> = (0..40).map(|k| ((k * 7 % 11) as f64 + 1.0) / 300.0).collect();
        let b: Vec<f64> = (0..40).map(|k| ((k * 3 % 5) as f64 + 0.5) / 100.0).collect();
        for (x, y) in ops.convolve(&a, &b).iter().zip(table.convolve(&a, &b)) {
            assert!((x - y).abs() < 1e-14);
        }
        for (x, y) in ops.correlate(&a, &b).iter().zip(table.correlate(&a, &b)) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_noise_on_grid_is_near_half_bit() {
        let (g, d) = quadratic_grid(1.0, 129);
        let noise = gibbs_law(d.difference_vector().unwrap(), 1.0).unwrap();
        let cfg = SolverConfig::default().with_tolerance(1e-7);
        let c = constrained_additive_capacity(&noise, &d, 1.0, &g, &cfg).unwrap();
        assert!((c.value - 0.5).abs() < 0.05, "{}", c.value);
    }
}
