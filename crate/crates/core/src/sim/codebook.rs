use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::contingency::ConditionalSet;
use crate::prob::typical::{counts, is_jointly_typical, is_typical, TypeClassSet};
use crate::prob::{JointPmf, Pmf, SeededRng, Typicality};

/// Largest codebook materialized explicitly.
pub const EXPLICIT_CODEWORD_CAP: u64 = 1 << 20;

/// `log2` of the codeword count `floor(2^(n rate))`, at least one codeword.
pub fn log2_codewords(n: usize, rate: f64) -> f64 {
    let bits = n as f64 * rate;
    if bits < 1.0 {
        0.0
    } else if bits < 52.0 {
        (bits.exp2().floor()).log2()
    } else {
        bits
    }
}

/// Natural log of `(1 - q)^M` for `M = 2^log2_m` and `ln q` given.
pub fn ln_all_miss(log2_m: f64, ln_q: f64) -> f64 {
    if ln_q == f64::NEG_INFINITY {
        return 0.0;
    }
    if ln_q >= 0.0 {
        return f64::NEG_INFINITY;
    }
    let q = ln_q.exp();
    // M ln(1 - q) = -exp(log M + ln(-ln(1 - q)))
    let per = if q < 1e-8 { ln_q + (1.0 + 0.5 * q).ln() } else { (-(-q).ln_1p()).ln() };
    -(log2_m * std::f64::consts::LN_2 + per).exp()
}

/// An explicitly stored codebook of sequences drawn uniformly from a typical set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub rate: f64,
    pub n_prime: usize,
    pub law: Pmf,
    pub seed: SeededRng,
    pub codewords: Vec<Vec<usize>>,
}

impl Codebook {
    /// `floor(2^(n rate))` codewords, each uniform over the `rule`-typical set of `law`.
    pub fn generate(law: &Pmf, n_prime: usize, rate: f64, rule: Typicality, seed: SeededRng) -> Result<Self> {
        let log2_m = log2_codewords(n_prime, rate);
        if log2_m > (EXPLICIT_CODEWORD_CAP as f64).log2() {
            return Err(Error::EnumerationCap {
                what: "explicit codebook".into(),
                needed: log2_m.exp2() as u128,
                cap: EXPLICIT_CODEWORD_CAP as u128,
            });
        }
        let count = log2_m.exp2().round() as usize;
        let set = TypeClassSet::typical(law, n_prime, rule)?;
        if set.is_empty() {
            return Err(Error::EmptyTypicalSet { n: n_prime, delta: rule.delta() });
        }
        let mut rng = seed.generator();
        let codewords = (0..count).map(|_| set.sample(&mut rng)).collect::<Result<_>>()?;
        Ok(Self {
            rate,
            n_prime,
            law: law.clone(),
            seed,
            codewords,
        })
    }

    /// Lowest index whose codeword is jointly typical with `x` under `joint` (axes `[x, y]`).
    pub fn first_jointly_typical(&self, x: &[usize], joint: &JointPmf, rule: Typicality) -> Option<usize> {
        self.codewords
            .iter()
            .position(|y| is_jointly_typical(x, y, joint, rule))
    }
}

/// Result of covering one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverOutcome {
    pub y: Vec<usize>,
    pub x_typical: bool,
    pub found: bool,
}

/// A covering codebook of `2^(n rate)` codewords uniform over the typical set of
/// the `y` marginal, used through its exact ensemble law instead of being stored.
///
/// For a given `x`, let `A(x)` be the typical `y` jointly typical with it and `q`
/// the fraction of the typical set it occupies. Over the codebook ensemble the
/// encoder fails with probability `(1 - q)^M`; on success the first jointly
/// typical codeword is uniform on `A(x)`; on failure the encoder emits codeword 1,
/// which is then uniform on the typical set minus `A(x)`.
#[derive(Debug, Clone)]
pub struct LazyCoveringCodebook {
    n: usize,
    joint: JointPmf,
    x_law: Pmf,
    rule: Typicality,
    log2_m: f64,
    y_set: TypeClassSet,
}

impl LazyCoveringCodebook {
    pub fn new(joint: &JointPmf, n: usize, rate: f64, rule: Typicality) -> Result<Self> {
        if joint.rank() != 2 {
            return Err(Error::Dimension("covering needs a two-axis joint law".into()));
        }
        let y_law = joint.marginal_axis(1)?;
        let y_set = TypeClassSet::typical(&y_law, n, rule)?;
        if y_set.is_empty() {
            return Err(Error::EmptyTypicalSet { n, delta: rule.delta() });
        }
        Ok(Self {
            n,
            joint: joint.clone(),
            x_law: joint.marginal_axis(0)?,
            rule,
            log2_m: log2_codewords(n, rate),
            y_set,
        })
    }

    pub fn log2_codewords(&self) -> f64 {
        self.log2_m
    }

    /// Natural log of the probability that no codeword covers `x`.
    pub fn ln_miss_probability(&self, x: &[usize]) -> Result<f64> {
        let a = self.cover_set(x)?;
        Ok(ln_all_miss(self.log2_m, a.log_total() - self.y_set.log_size()))
    }

    fn cover_set(&self, x: &[usize]) -> Result<ConditionalSet> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!("sequence of length {} for a length-{} codebook", x.len(), self.n)));
        }
        ConditionalSet::jointly_typical(&counts(x, self.x_law.alphabet_size()), &self.joint, self.rule)
    }

    pub fn encode<R: Rng + ?Sized>(&self, x: &[usize], rng: &mut R) -> Result<CoverOutcome> {
        let x_typical = is_typical(x, &self.x_law, self.rule);
        let a = self.cover_set(x)?;
        let ln_miss = ln_all_miss(self.log2_m, a.log_total() - self.y_set.log_size());
        let u: f64 = rng.gen();
        if !a.is_empty() && u >= ln_miss.exp() {
            return Ok(CoverOutcome {
                y: a.sample_sequence(x, rng)?,
                x_typical,
                found: true,
            });
        }
        let mut y = self.y_set.sample(rng)?;
        for _ in 0..256 {
            if !is_jointly_typical(x, &y, &self.joint, self.rule) {
                break;
            }
            y = self.y_set.sample(rng)?;
        }
        Ok(CoverOutcome {
            y,
            x_typical,
            found: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::rng::sample_iid;
    use crate::prob::Dmc;

    #[test]
    fn miss_probability_limits() {
        assert_eq!(ln_all_miss(10.0, f64::NEG_INFINITY), 0.0);
        let v = ln_all_miss(3.0, (0.5f64).ln());
        assert!((v - 8.0 * (0.5f64).ln()).abs() < 1e-12);
        let tiny = ln_all_miss(2.0, -40.0);
        assert!((tiny + 4.0 * (-40.0f64).exp()).abs() < 1e-25);
    }

    #[test]
    fn lazy_matches_explicit_failure_rate() {
        // small blocks where explicit codebooks are cheap
        let joint = Dmc::bsc(0.2).unwrap().joint(&Pmf::uniform(2)).unwrap();
        let rule = Typicality::Robust(0.5);
        let (n, rate) = (12, 0.4);
        let lazy = LazyCoveringCodebook::new(&joint, n, rate, rule).unwrap();
        let root = SeededRng::new(11);
        let mut rng = root.child(0).generator();
        let trials = 3000;
        let mut explicit_miss = 0;
        let mut lazy_miss = 0.0;
        for t in 0..trials {
            let x = sample_iid(&Pmf::uniform(2), n, &mut rng);
            let y_law = joint.marginal_axis(1).unwrap();
            let book = Codebook::generate(&y_law, n, rate, rule, root.child(t + 1)).unwrap();
            if book.first_jointly_typical(&x, &joint, rule).is_none() {
                explicit_miss += 1;
            }
            lazy_miss += lazy.ln_miss_probability(&x).unwrap().exp();
        }
        let e = explicit_miss as f64 / trials as f64;
        let l = lazy_miss / trials as f64;
        assert!((e - l).abs() < 0.03, "explicit {e} lazy {l}");
    }
}
