//! Strong typicality, exact counting of typical sets and uniform sampling from them.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pmf::{JointPmf, Pmf};
use super::rng::{sample_iid, SeededRng};
use crate::error::{Error, Result};

/// Slack used when turning real frequency bounds into integer count bounds.
const COUNT_EPS: f64 = 1e-9;

/// How far an empirical frequency may stray from its target probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "delta", rename_all = "snake_case")]
pub enum Typicality {
    /// `|N(a)/n - p(a)| <= delta`.
    Absolute(f64),
    /// `|N(a)/n - p(a)| <= delta * p(a)`.
    Robust(f64),
}

impl Typicality {
    pub fn delta(&self) -> f64 {
        match self {
            Typicality::Absolute(d) | Typicality::Robust(d) => *d,
        }
    }

    fn half_width(&self, p: f64) -> f64 {
        match self {
            Typicality::Absolute(d) => *d,
            Typicality::Robust(d) => d * p,
        }
    }

    /// Inclusive count range `[lo, hi]` allowed for a letter of probability `p`.
    /// Letters with `p = 0` must not occur.
    pub fn count_range(&self, p: f64, n: usize) -> (usize, usize) {
        if p <= 0.0 {
            return (0, 0);
        }
        let w = self.half_width(p);
        let nf = n as f64;
        let lo = (nf * (p - w) - COUNT_EPS).ceil().max(0.0);
        let hi = (nf * (p + w) + COUNT_EPS).floor().min(nf);
        if lo > hi {
            // empty range; encoded as lo > hi
            return (1, 0);
        }
        (lo as usize, hi as usize)
    }

    pub fn count_ranges(&self, probs: &[f64], n: usize) -> Vec<(usize, usize)> {
        probs.iter().map(|p| self.count_range(*p, n)).collect()
    }

    fn check(&self) -> Result<()> {
        let d = self.delta();
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "typicality delta must be positive, got {d}"
            )));
        }
        Ok(())
    }
}

/// Letter counts of `seq` over an alphabet of size `q`.
pub fn counts(seq: &[usize], q: usize) -> Vec<usize> {
    let mut c = vec![0; q];
    for s in seq {
        c[*s] += 1;
    }
    c
}

/// Empirical distribution of `seq` over an alphabet of size `q`.
pub fn empirical(seq: &[usize], q: usize) -> Vec<f64> {
    let n = seq.len().max(1) as f64;
    counts(seq, q).into_iter().map(|c| c as f64 / n).collect()
}

fn counts_typical(counts: &[usize], probs: &[f64], n: usize, rule: Typicality) -> bool {
    counts.iter().zip(probs).all(|(c, p)| {
        let (lo, hi) = rule.count_range(*p, n);
        lo <= *c && *c <= hi
    })
}

/// Absolute strong typicality: every letter frequency within `delta` of `p`,
/// and no letter of probability zero present.
pub fn is_strongly_typical(seq: &[usize], p: &Pmf, delta: f64) -> bool {
    is_typical(seq, p, Typicality::Absolute(delta))
}

pub fn is_typical(seq: &[usize], p: &Pmf, rule: Typicality) -> bool {
    if seq.iter().any(|s| *s >= p.alphabet_size()) {
        return false;
    }
    counts_typical(
        &counts(seq, p.alphabet_size()),
        p.probs(),
        seq.len(),
        rule,
    )
}

/// Joint strong typicality of `(x, y)` with respect to a two-axis law.
pub fn is_jointly_typical(x: &[usize], y: &[usize], joint: &JointPmf, rule: Typicality) -> bool {
    if x.len() != y.len() || joint.rank() != 2 {
        return false;
    }
    let (nx, ny) = (joint.dims()[0], joint.dims()[1]);
    if x.iter().any(|a| *a >= nx) || y.iter().any(|b| *b >= ny) {
        return false;
    }
    let pairs: Vec<usize> = x.iter().zip(y).map(|(a, b)| a * ny + b).collect();
    counts_typical(&counts(&pairs, nx * ny), joint.probs(), x.len(), rule)
}

/// Cumulative table of `ln k!`.
#[derive(Debug, Clone)]
pub struct LnFactorial(Vec<f64>);

impl LnFactorial {
    pub fn new(n: usize) -> Self {
        let mut t = Vec::with_capacity(n + 1);
        t.push(0.0);
        for k in 1..=n {
            t.push(t[k - 1] + (k as f64).ln());
        }
        Self(t)
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }
}

pub(crate) fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Picks an index with probability proportional to `exp(logw[i])`.
pub(crate) fn sample_log_weights<R: Rng + ?Sized>(logw: &[f64], rng: &mut R) -> usize {
    let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|x| (x - m).exp()).collect();
    let total: f64 = w.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, wi) in w.iter().enumerate() {
        if *wi <= 0.0 {
            continue;
        }
        acc += wi;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// The set of length-`n` sequences whose letter counts lie in given ranges,
/// with each sequence weighted by `prod_a w(a)^{N(a)}` (unit weights count sequences).
///
/// Counting and sampling are exact, via a dynamic program over letters whose
/// state is the number of positions already assigned.
#[derive(Debug, Clone)]
pub struct TypeClassSet {
    n: usize,
    ranges: Vec<(usize, usize)>,
    log_w: Vec<f64>,
    // suffix[k][t]: ln sum over (c_k..c_{q-1}) summing to t of prod w^c / c!
    suffix: Vec<Vec<f64>>,
    lnf: LnFactorial,
}

impl TypeClassSet {
    /// Strongly typical sequences for `p` under `rule`, counted with unit weight.
    pub fn typical(p: &Pmf, n: usize, rule: Typicality) -> Result<Self> {
        rule.check()?;
        let ranges = rule.count_ranges(p.probs(), n);
        Self::new(n, ranges, vec![0.0; p.alphabet_size()])
    }

    /// Same set, each sequence weighted by its i.i.d. probability under `weights`.
    pub fn typical_weighted(p: &Pmf, n: usize, rule: Typicality, weights: &Pmf) -> Result<Self> {
        rule.check()?;
        let ranges = rule.count_ranges(p.probs(), n);
        let log_w = weights.probs().iter().map(|w| w.ln()).collect();
        Self::new(n, ranges, log_w)
    }

    pub fn new(n: usize, ranges: Vec<(usize, usize)>, log_w: Vec<f64>) -> Result<Self> {
        let q = ranges.len();
        if q == 0 || log_w.len() != q {
            return Err(Error::Dimension("type class set needs matching ranges and weights".into()));
        }
        let lnf = LnFactorial::new(n);
        let mut suffix = vec![vec![f64::NEG_INFINITY; n + 1]; q + 1];
        suffix[q][0] = 0.0;
        for k in (0..q).rev() {
            let (lo, hi) = ranges[k];
            for t in 0..=n {
                let terms = (lo..=hi.min(t)).filter_map(|c| {
                    let rest = suffix[k + 1][t - c];
                    let own = cell_log_weight(c, log_w[k], &lnf)?;
                    (rest > f64::NEG_INFINITY).then_some(own + rest)
                });
                suffix[k][t] = log_sum_exp(terms);
            }
        }
        Ok(Self {
            n,
            ranges,
            log_w,
            suffix,
            lnf,
        })
    }

    /// Natural log of the total weight (the log-cardinality for unit weights).
    pub fn log_size(&self) -> f64 {
        self.lnf.get(self.n) + self.suffix[0][self.n]
    }

    pub fn is_empty(&self) -> bool {
        self.suffix[0][self.n] == f64::NEG_INFINITY
    }

    pub fn contains_counts(&self, c: &[usize]) -> bool {
        c.len() == self.ranges.len()
            && c.iter().sum::<usize>() == self.n
            && c.iter().zip(&self.ranges).all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    /// Draws a count vector with probability proportional to the total weight of its type class.
    pub fn sample_counts<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<usize>> {
        if self.is_empty() {
            return Err(Error::Infeasible(format!(
                "no length-{} sequence has counts in the requested ranges",
                self.n
            )));
        }
        let q = self.ranges.len();
        let mut left = self.n;
        let mut out = Vec::with_capacity(q);
        for k in 0..q {
            let (lo, hi) = self.ranges[k];
            let cands: Vec<usize> = (lo..=hi.min(left)).collect();
            let logw: Vec<f64> = cands
                .iter()
                .map(|c| {
                    cell_log_weight(*c, self.log_w[k], &self.lnf).unwrap_or(f64::NEG_INFINITY)
                        + self.suffix[k + 1][left - c]
                })
                .collect();
            let c = cands[sample_log_weights(&logw, rng)];
            out.push(c);
            left -= c;
        }
        Ok(out)
    }

    /// Draws a sequence with probability proportional to its weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<usize>> {
        let c = self.sample_counts(rng)?;
        Ok(arrange(&c, rng))
    }
}

/// `c * ln w - ln c!`, or `None` when a zero-weight letter would be used.
fn cell_log_weight(c: usize, log_w: f64, lnf: &LnFactorial) -> Option<f64> {
    if c == 0 {
        return Some(0.0);
    }
    if log_w == f64::NEG_INFINITY {
        return None;
    }
    Some(c as f64 * log_w - lnf.get(c))
}

/// A uniformly random sequence with the given letter counts.
pub fn arrange<R: Rng + ?Sized>(counts: &[usize], rng: &mut R) -> Vec<usize> {
    let mut seq: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(a, c)| std::iter::repeat(a).take(*c))
        .collect();
    seq.shuffle(rng);
    seq
}

/// A sequence drawn exactly uniformly from the strongly typical set of `p`.
///
/// The type is drawn with probability proportional to its class size, then a
/// uniformly random arrangement of that type is returned.
pub fn sample_typical_uniform(p: &Pmf, n: usize, delta: f64, rng: &SeededRng) -> Result<Vec<usize>> {
    sample_typical_uniform_with(p, n, Typicality::Absolute(delta), rng)
}

pub fn sample_typical_uniform_with(
    p: &Pmf,
    n: usize,
    rule: Typicality,
    rng: &SeededRng,
) -> Result<Vec<usize>> {
    let set = TypeClassSet::typical(p, n, rule)?;
    if set.is_empty() {
        return Err(Error::EmptyTypicalSet {
            n,
            delta: rule.delta(),
        });
    }
    set.sample(&mut rng.generator())
}

/// Rejection sampler: i.i.d. draws from `p` until one is typical.
///
/// Accepted sequences are uniform within each type class but classes are
/// weighted by their probability under `p`, so the result is not uniform over
/// the whole typical set.
pub fn sample_typical_rejection(
    p: &Pmf,
    n: usize,
    delta: f64,
    budget: usize,
    rng: &SeededRng,
) -> Result<Vec<usize>> {
    let rule = Typicality::Absolute(delta);
    rule.check()?;
    let mut r = rng.generator();
    for _ in 0..budget {
        let s = sample_iid(p, n, &mut r);
        if is_typical(&s, p, rule) {
            return Ok(s);
        }
    }
    Err(Error::EmptyTypicalSet { n, delta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom_ln(n: usize, k: usize) -> f64 {
        let f = LnFactorial::new(n);
        f.get(n) - f.get(k) - f.get(n - k)
    }

    #[test]
    fn typicality_examples() {
        let p = Pmf::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert!(is_strongly_typical(&[0, 0, 1, 2], &p, 1e-9));
        let q = Pmf::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert!(!is_strongly_typical(&[0, 1, 2, 0, 1, 0], &q, 0.5));
        assert!(!is_strongly_typical(&[1, 1, 1, 0], &q, 0.2));
        assert!(is_strongly_typical(&[1, 1, 0, 0], &q, 0.01));
    }

    #[test]
    fn count_range_edges() {
        let r = Typicality::Absolute(0.05);
        assert_eq!(r.count_range(0.3, 100), (25, 35));
        assert_eq!(r.count_range(0.0, 100), (0, 0));
        let rob = Typicality::Robust(0.1);
        assert_eq!(rob.count_range(0.5, 100), (45, 55));
        assert_eq!(r.count_range(1.0, 10), (10, 10));
    }

    #[test]
    fn exact_size_matches_binomial_sum() {
        let p = Pmf::bernoulli(0.3).unwrap();
        let n = 200;
        let set = TypeClassSet::typical(&p, n, Typicality::Absolute(0.05)).unwrap();
        let direct = log_sum_exp((50..=70).map(|k| binom_ln(n, k)));
        assert!((set.log_size() - direct).abs() < 1e-9);
        // weighted by p itself gives P(typical)
        let w = TypeClassSet::typical_weighted(&p, n, Typicality::Absolute(0.05), &p).unwrap();
        let prob: f64 = (50..=70)
            .map(|k| (binom_ln(n, k) + k as f64 * 0.3f64.ln() + (n - k) as f64 * 0.7f64.ln()).exp())
            .sum();
        assert!((w.log_size().exp() - prob).abs() < 1e-12);
    }

    #[test]
    fn uniform_sampler_hits_types_by_class_size() {
        // n = 4, p = (1/2, 1/2), delta = 0.25 admits counts 1..=3 of symbol 1:
        // class sizes 4, 6, 4.
        let p = Pmf::uniform(2);
        let set = TypeClassSet::typical(&p, 4, Typicality::Absolute(0.25)).unwrap();
        assert!((set.log_size() - 14f64.ln()).abs() < 1e-12);
        let mut r = SeededRng::new(5).generator();
        let mut tally = [0usize; 5];
        let trials = 14_000;
        for _ in 0..trials {
            let s = set.sample(&mut r).unwrap();
            tally[s.iter().sum::<usize>()] += 1;
        }
        assert_eq!(tally[0] + tally[4], 0);
        let mid = tally[2] as f64 / trials as f64;
        assert!((mid - 6.0 / 14.0).abs() < 0.02, "{mid}");
    }

    #[test]
    fn sampler_examples() {
        let pm = Pmf::point_mass(3, 2);
        let s = sample_typical_uniform(&pm, 10, 0.1, &SeededRng::new(1)).unwrap();
        assert_eq!(s, vec![2; 10]);
        let p = Pmf::bernoulli(0.3).unwrap();
        for seed in 0..100 {
            let s = sample_typical_uniform(&p, 1000, 0.05, &SeededRng::new(seed)).unwrap();
            assert!(is_strongly_typical(&s, &p, 0.05));
        }
        // n too small for delta: no integer count lies within 0.01 of 0.3 * 7
        assert!(matches!(
            sample_typical_uniform(&p, 7, 0.01, &SeededRng::new(1)),
            Err(Error::EmptyTypicalSet { .. })
        ));
    }

    #[test]
    fn rejection_budget() {
        let p = Pmf::bernoulli(0.3).unwrap();
        assert!(sample_typical_rejection(&p, 7, 0.01, 50, &SeededRng::new(2)).is_err());
        let s = sample_typical_rejection(&p, 1000, 0.05, 1000, &SeededRng::new(2)).unwrap();
        assert!(is_strongly_typical(&s, &p, 0.05));
    }
}
