use serde::{Deserialize, Serialize};

use super::{SolverConfig, SolverResult, LOG2E};
use crate::error::{Error, Result};
use crate::prob::{DistortionMeasure, Pmf};

/// One point of the Blahut-Arimoto rate-distortion sweep at slope `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    /// Lagrange multiplier in nats per unit distortion; infinite for the lossless limit.
    pub beta: f64,
    pub distortion: f64,
    /// Mutual information of the test channel, in bits.
    pub rate: f64,
    /// Reconstruction law the test channel was built from.
    pub output: Vec<f64>,
    // -sum_s p(s) ln Z(s) - max_t ln c(t): intercept of the dual lower bound, nats
    #[serde(skip)]
    dual_intercept: f64,
}

impl RdPoint {
    /// Lower bound on `R(d)` in bits implied by this point.
    fn dual_bound(&self, d: f64) -> f64 {
        if self.beta.is_infinite() {
            // only informative at zero distortion
            return if d == 0.0 { (self.dual_intercept * LOG2E).max(0.0) } else { 0.0 };
        }
        ((self.dual_intercept - self.beta * d) * LOG2E).max(0.0)
    }

    /// Lower bound on `D(r)` implied by this point (`r` in bits).
    fn dual_distortion_bound(&self, r: f64) -> f64 {
        if self.beta.is_infinite() {
            return 0.0;
        }
        ((self.dual_intercept - r / LOG2E) / self.beta).max(0.0)
    }
}

struct Problem<'a> {
    p: &'a [f64],
    d: &'a DistortionMeasure,
    inner_tol: f64,
    max_iterations: usize,
    solve_cap: usize,
    iterations: usize,
}

impl Problem<'_> {
    fn weight(&self, beta: f64, dist: f64) -> f64 {
        if beta.is_infinite() {
            if dist == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            (-beta * dist).exp()
        }
    }

    /// Runs the fixed-slope iteration from `q` until `max_t ln c(t) <= inner_tol`.
    fn solve(&mut self, beta: f64, mut q: Vec<f64>) -> RdPoint {
        let ns = self.p.len();
        let nt = q.len();
        let a: Vec<Vec<f64>> = (0..ns)
            .map(|s| (0..nt).map(|t| self.weight(beta, self.d.d(s, t))).collect())
            .collect();
        let mut z = vec![0.0; ns];
        let mut c = vec![0.0; nt];
        let start = self.iterations;
        loop {
            for s in 0..ns {
                z[s] = (0..nt).map(|t| q[t] * a[s][t]).sum();
            }
            for (t, ct) in c.iter_mut().enumerate() {
                *ct = (0..ns)
                    .filter(|s| self.p[*s] > 0.0)
                    .map(|s| self.p[s] * a[s][t] / z[s])
                    .sum();
            }
            let max_ln_c = c
                .iter()
                .map(|v| if *v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
                .fold(f64::NEG_INFINITY, f64::max);
            self.iterations += 1;
            // a truncated solve still reads out a valid test channel and dual bound
            if max_ln_c <= self.inner_tol
                || self.iterations >= self.max_iterations
                || self.iterations - start >= self.solve_cap
            {
                return self.readout(beta, q, &a, &z, max_ln_c);
            }
            for (qt, ct) in q.iter_mut().zip(&c) {
                *qt *= ct;
            }
            let total: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= total);
        }
    }

    fn readout(&self, beta: f64, q: Vec<f64>, a: &[Vec<f64>], z: &[f64], max_ln_c: f64) -> RdPoint {
        let nt = q.len();
        let mut out = vec![0.0; nt];
        let mut distortion = 0.0;
        let mut cond = vec![vec![0.0; nt]; self.p.len()];
        for (s, ps) in self.p.iter().enumerate() {
            if *ps == 0.0 {
                continue;
            }
            for t in 0..nt {
                let w = q[t] * a[s][t] / z[s];
                cond[s][t] = w;
                out[t] += ps * w;
                distortion += ps * w * self.d.d(s, t);
            }
        }
        // W(t|s) / out(t) = a(s,t) / (z(s) c(t)) does not involve q, so
        // output letters with underflowed mass stay finite
        let c: Vec<f64> = (0..nt)
            .map(|t| {
                (0..self.p.len())
                    .filter(|s| self.p[*s] > 0.0)
                    .map(|s| self.p[s] * a[s][t] / z[s])
                    .sum()
            })
            .collect();
        let mut rate = 0.0;
        for (s, ps) in self.p.iter().enumerate() {
            for t in 0..nt {
                let w = cond[s][t];
                if *ps > 0.0 && w > 0.0 {
                    rate += ps * w * (a[s][t] / (z[s] * c[t])).ln();
                }
            }
        }
        let intercept = -self
            .p
            .iter()
            .zip(z)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, zs)| p * zs.ln())
            .sum::<f64>()
            - max_ln_c;
        RdPoint {
            beta,
            distortion,
            rate: (rate * LOG2E).max(0.0),
            output: q,
            dual_intercept: intercept,
        }
    }

    fn default_grid(&self, d_max: f64) -> Vec<f64> {
        (0..64)
            .map(|k| 10f64.powf(-2.0 + 6.0 * k as f64 / 63.0) / d_max)
            .collect()
    }

    /// Finds adjacent points with `key(lo) >= target >= key(hi)`; `key` must be
    /// nonincreasing in `beta`.
    fn bracket(
        &mut self,
        grid: &[f64],
        key: impl Fn(&RdPoint) -> f64,
        target: f64,
    ) -> Result<(RdPoint, RdPoint)> {
        let nt = self.d.recon_size();
        let uniform = vec![1.0 / nt as f64; nt];
        let mut prev: Option<RdPoint> = None;
        for b in grid {
            let q = prev.as_ref().map_or_else(|| uniform.clone(), |p| p.output.clone());
            let pt = self.solve(*b, q);
            if key(&pt) <= target {
                match prev {
                    Some(lo) => return Ok((lo, pt)),
                    None => return self.extend_down(pt, &key, target),
                }
            }
            prev = Some(pt);
        }
        let mut lo = prev.expect("grid is nonempty");
        for _ in 0..200 {
            let pt = self.solve(lo.beta * 4.0, lo.output.clone());
            if key(&pt) <= target {
                return Ok((lo, pt));
            }
            lo = pt;
        }
        let pt = self.solve(f64::INFINITY, lo.output.clone());
        Ok((lo, pt))
    }

    fn extend_down(
        &mut self,
        mut hi: RdPoint,
        key: &impl Fn(&RdPoint) -> f64,
        target: f64,
    ) -> Result<(RdPoint, RdPoint)> {
        let nt = self.d.recon_size();
        for _ in 0..200 {
            let pt = self.solve(hi.beta / 4.0, vec![1.0 / nt as f64; nt]);
            if key(&pt) >= target {
                return Ok((pt, hi));
            }
            hi = pt;
        }
        Err(Error::Infeasible(format!(
            "could not bracket target {target} on the rate-distortion curve"
        )))
    }

    fn bisect(
        &mut self,
        mut lo: RdPoint,
        mut hi: RdPoint,
        key: impl Fn(&RdPoint) -> f64,
        target: f64,
        done: impl Fn(&RdPoint, &RdPoint) -> bool,
    ) -> (RdPoint, RdPoint, bool) {
        while self.iterations < self.max_iterations {
            if done(&lo, &hi) {
                return (lo, hi, true);
            }
            if hi.beta.is_infinite() {
                // move the infinite end in from above first
                let mid = self.solve(lo.beta * 16.0, hi.output.clone());
                if key(&mid) <= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
                continue;
            }
            if (hi.beta / lo.beta).ln() < 1e-13 {
                let ok = done(&lo, &hi);
                return (lo, hi, ok);
            }
            let mid_beta = (lo.beta * hi.beta).sqrt();
            let mid = self.solve(mid_beta, hi.output.clone());
            if key(&mid) <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let ok = done(&lo, &hi);
        (lo, hi, ok)
    }
}

/// Per-slope iteration cap; the fixed-slope iteration slows down sharply
/// near slopes where an output letter's mass reaches zero.
fn solve_cap(cfg: &SolverConfig) -> usize {
    (cfg.max_iterations / 64).max(2000)
}

fn check_inputs(src: &Pmf, d: &DistortionMeasure, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    d.check_source(src)
}

/// Interpolation weight of `lo` so that `lambda * lo + (1 - lambda) * hi` hits `target`.
fn lambda(lo: f64, hi: f64, target: f64) -> f64 {
    if (lo - hi).abs() < 1e-300 {
        return 1.0;
    }
    ((target - hi) / (lo - hi)).clamp(0.0, 1.0)
}

fn mix(a: &[f64], b: &[f64], l: f64) -> Result<Pmf> {
    Pmf::from_weights(a.iter().zip(b).map(|(x, y)| l * x + (1.0 - l) * y).collect())
}

/// Rate-distortion function `R(D)` in bits.
///
/// A Lagrangian sweep brackets `D` between two slopes, bisection on the slope
/// narrows the bracket, and the value is read from the chord between the two
/// bracketing test channels, which time-sharing makes achievable. The lower
/// bound is Blahut's dual bound. `argument` is the reconstruction law.
pub fn rate_distortion(src: &Pmf, d: &DistortionMeasure, target: f64, cfg: &SolverConfig) -> Result<SolverResult> {
    check_inputs(src, d, cfg)?;
    if !(target >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "distortion {target} is below the minimum achievable distortion 0"
        )));
    }
    let (d_max, best) = d.d_max_with_arg(src);
    if target >= d_max {
        return Ok(SolverResult::exact(0.0, Pmf::point_mass(d.recon_size(), best)));
    }
    let mut prob = Problem {
        p: src.probs(),
        d,
        inner_tol: cfg.tolerance / LOG2E * 0.05,
        max_iterations: cfg.max_iterations,
        solve_cap: solve_cap(cfg),
        iterations: 0,
    };
    let nt = d.recon_size();
    if target == 0.0 {
        let pt = prob.solve(f64::INFINITY, vec![1.0 / nt as f64; nt]);
        let lower = pt.dual_bound(0.0).min(pt.rate);
        return Ok(SolverResult {
            value: pt.rate,
            argument: Pmf::from_weights(pt.output.clone())?,
            lower_bound: lower,
            upper_bound: pt.rate,
            iterations: prob.iterations,
            converged: pt.rate - lower <= cfg.tolerance,
        });
    }
    let grid = if cfg.lagrange_grid.is_empty() {
        prob.default_grid(d_max)
    } else {
        let mut g = cfg.lagrange_grid.clone();
        g.sort_by(f64::total_cmp);
        g
    };
    let key = |p: &RdPoint| p.distortion;
    let (lo, hi) = prob.bracket(&grid, key, target)?;
    let bounds = |lo: &RdPoint, hi: &RdPoint| {
        let l = lambda(lo.distortion, hi.distortion, target);
        let upper = l * lo.rate + (1.0 - l) * hi.rate;
        let lower = lo.dual_bound(target).max(hi.dual_bound(target)).min(upper);
        (lower, upper, l)
    };
    let tol = cfg.tolerance;
    let (lo, hi, converged) = prob.bisect(lo, hi, key, target, |a, b| {
        let (l, u, _) = bounds(a, b);
        u - l <= tol
    });
    let (lower, upper, l) = bounds(&lo, &hi);
    Ok(SolverResult {
        value: upper,
        argument: mix(&lo.output, &hi.output, l)?,
        lower_bound: lower,
        upper_bound: upper,
        iterations: prob.iterations,
        converged,
    })
}

/// Distortion-rate function `D(R) = inf{D : R(D) <= R}` for `R` in bits.
///
/// `value` is a distortion (not bits); bounds bracket it the same way.
pub fn distortion_rate(src: &Pmf, d: &DistortionMeasure, rate: f64, cfg: &SolverConfig) -> Result<SolverResult> {
    check_inputs(src, d, cfg)?;
    if !(rate >= 0.0) {
        return Err(Error::InvalidArgument(format!("rate {rate} must be nonnegative")));
    }
    let (d_max, best) = d.d_max_with_arg(src);
    if rate == 0.0 {
        return Ok(SolverResult::exact(d_max, Pmf::point_mass(d.recon_size(), best)));
    }
    let mut prob = Problem {
        p: src.probs(),
        d,
        inner_tol: cfg.tolerance / LOG2E * 0.05,
        max_iterations: cfg.max_iterations,
        solve_cap: solve_cap(cfg),
        iterations: 0,
    };
    let nt = d.recon_size();
    let lossless = prob.solve(f64::INFINITY, vec![1.0 / nt as f64; nt]);
    if rate >= lossless.rate {
        return Ok(SolverResult {
            value: 0.0,
            argument: Pmf::from_weights(lossless.output)?,
            lower_bound: 0.0,
            upper_bound: 0.0,
            iterations: prob.iterations,
            converged: true,
        });
    }
    let grid = if cfg.lagrange_grid.is_empty() {
        prob.default_grid(d_max)
    } else {
        let mut g = cfg.lagrange_grid.clone();
        g.sort_by(f64::total_cmp);
        g
    };
    let key = |p: &RdPoint| -p.rate;
    let (lo, hi) = prob.bracket(&grid, key, -rate)?;
    let bounds = |lo: &RdPoint, hi: &RdPoint| {
        let l = lambda(lo.rate, hi.rate, rate);
        let upper = l * lo.distortion + (1.0 - l) * hi.distortion;
        let lower = lo
            .dual_distortion_bound(rate)
            .max(hi.dual_distortion_bound(rate))
            .min(upper);
        (lower, upper, l)
    };
    // bracket width in distortion; the tolerance is shared with the rate solvers
    let tol = cfg.tolerance;
    let (lo, hi, converged) = prob.bisect(lo, hi, key, -rate, |a, b| {
        let (l, u, _) = bounds(a, b);
        u - l <= tol
    });
    let (lower, upper, l) = bounds(&lo, &hi);
    Ok(SolverResult {
        value: upper,
        argument: mix(&lo.output, &hi.output, l)?,
        lower_bound: lower,
        upper_bound: upper,
        iterations: prob.iterations,
        converged,
    })
}

/// The Lagrangian sweep itself: one converged point per multiplier.
pub fn rd_curve(src: &Pmf, d: &DistortionMeasure, cfg: &SolverConfig) -> Result<Vec<RdPoint>> {
    check_inputs(src, d, cfg)?;
    let (d_max, _) = d.d_max_with_arg(src);
    let mut prob = Problem {
        p: src.probs(),
        d,
        inner_tol: cfg.tolerance / LOG2E * 0.05,
        max_iterations: usize::MAX,
        solve_cap: solve_cap(cfg),
        iterations: 0,
    };
    let grid = if cfg.lagrange_grid.is_empty() {
        prob.default_grid(d_max.max(1e-300))
    } else {
        cfg.lagrange_grid.clone()
    };
    let nt = d.recon_size();
    let mut q = vec![1.0 / nt as f64; nt];
    let mut out = Vec::with_capacity(grid.len());
    for b in grid {
        let pt = prob.solve(b, q);
        q = pt.output.clone();
        out.push(pt);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::info::{h2, h2_inv};

    #[test]
    fn binary_hamming_closed_form() {
        let src = Pmf::uniform(2);
        let h = DistortionMeasure::hamming(2);
        let cfg = SolverConfig::default();
        for dd in [0.01, 0.05, 0.11, 0.25, 0.4, 0.49] {
            let r = rate_distortion(&src, &h, dd, &cfg).unwrap();
            assert!((r.value - (1.0 - h2(dd))).abs() < 1e-8, "D={dd}: {}", r.value);
            assert!(r.converged);
            assert!(r.lower_bound <= r.value && r.value <= r.upper_bound);
        }
        assert_eq!(rate_distortion(&src, &h, 0.5, &cfg).unwrap().value, 0.0);
        assert!((rate_distortion(&src, &h, 0.0, &cfg).unwrap().value - 1.0).abs() < 1e-9);
        assert!(rate_distortion(&src, &h, -0.1, &cfg).is_err());
    }

    #[test]
    fn biased_binary_source() {
        // R(D) = h(p) - h(D) for D <= p
        let src = Pmf::bernoulli(0.3).unwrap();
        let h = DistortionMeasure::hamming(2);
        let cfg = SolverConfig::default();
        for dd in [0.02, 0.1, 0.2, 0.29] {
            let r = rate_distortion(&src, &h, dd, &cfg).unwrap();
            assert!((r.value - (h2(0.3) - h2(dd))).abs() < 1e-8, "D={dd}");
        }
        assert_eq!(rate_distortion(&src, &h, 0.3, &cfg).unwrap().value, 0.0);
    }

    #[test]
    fn distortion_rate_examples() {
        let src = Pmf::uniform(2);
        let h = DistortionMeasure::hamming(2);
        let cfg = SolverConfig::default();
        assert_eq!(distortion_rate(&src, &h, 0.0, &cfg).unwrap().value, 0.5);
        assert_eq!(distortion_rate(&src, &h, 1.0, &cfg).unwrap().value, 0.0);
        let d = distortion_rate(&src, &h, 0.5, &cfg).unwrap();
        assert!((d.value - h2_inv(0.5)).abs() < 1e-8, "{}", d.value);
        assert!((d.value - 0.11).abs() < 1e-3);
    }

    #[test]
    fn ternary_lossless_limit() {
        let src = Pmf::new(vec![0.5, 0.25, 0.25]).unwrap();
        let h = DistortionMeasure::hamming(3);
        let cfg = SolverConfig::default();
        let r0 = rate_distortion(&src, &h, 0.0, &cfg).unwrap();
        assert!((r0.value - 1.5).abs() < 1e-8);
        // Hamming on a q-ary source: R(D) = H(S) - h(D) - D log2(q - 1) for small D
        let r = rate_distortion(&src, &h, 0.1, &cfg).unwrap();
        assert!((r.value - (1.5 - h2(0.1) - 0.1)).abs() < 1e-7, "{}", r.value);
    }
}
