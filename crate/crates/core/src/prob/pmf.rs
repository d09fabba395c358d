//! Finite distributions and memoryless channels.
//!
//! All three types serialize to the same dense layout,
//! `{"dims": [...], "probs": [...]}`, with `probs` in row-major order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a distribution.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Dense {
    dims: Vec<usize>,
    probs: Vec<f64>,
}

fn check_mass(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what}: empty")));
    }
    if let Some((i, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < 0.0)
    {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entry {i} is {p}"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what}: mass sums to {total}"
        )));
    }
    Ok(())
}

/// A probability mass function on `{0, .., alphabet_size - 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Dense", into = "Dense")]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_mass(&probs, "pmf")?;
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights. Tiny negative round-off is clamped to zero.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let mut probs: Vec<f64> = weights
            .into_iter()
            .map(|w| if w < 0.0 && w > -1e-14 { 0.0 } else { w })
            .collect();
        if probs.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(Self { probs })
    }

    pub fn uniform(size: usize) -> Self {
        assert!(size > 0, "uniform pmf needs a nonempty alphabet");
        Self {
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn point_mass(size: usize, at: usize) -> Self {
        assert!(at < size, "point mass outside alphabet");
        let mut probs = vec![0.0; size];
        probs[at] = 1.0;
        Self { probs }
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDistribution(format!("bernoulli({p})")));
        }
        Ok(Self {
            probs: vec![1.0 - p, p],
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, symbol: usize) -> f64 {
        self.probs[symbol]
    }

    /// Symbols with positive probability.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, _)| i)
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Pmf, lambda: f64) -> Result<Pmf> {
        if self.alphabet_size() != other.alphabet_size() {
            return Err(Error::Dimension("mixing pmfs of different sizes".into()));
        }
        Pmf::from_weights(
            self.probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect(),
        )
    }

    /// Expectation of `f(symbol)`.
    pub fn expect(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, p)| p * f(i))
            .sum()
    }
}

impl TryFrom<Dense> for Pmf {
    type Error = Error;

    fn try_from(d: Dense) -> Result<Self> {
        if d.dims.len() != 1 || d.dims[0] != d.probs.len() {
            return Err(Error::Dimension(format!(
                "pmf dims {:?} do not match {} probabilities",
                d.dims,
                d.probs.len()
            )));
        }
        Pmf::new(d.probs)
    }
}

impl From<Pmf> for Dense {
    fn from(p: Pmf) -> Self {
        Dense {
            dims: vec![p.probs.len()],
            probs: p.probs,
        }
    }
}

/// A joint distribution over a product of finite alphabets, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Dense", into = "Dense")]
pub struct JointPmf {
    dims: Vec<usize>,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(dims: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|d| *d == 0) {
            return Err(Error::Dimension(format!("bad joint dims {dims:?}")));
        }
        let size: usize = dims.iter().product();
        if size != probs.len() {
            return Err(Error::Dimension(format!(
                "joint dims {dims:?} need {size} entries, got {}",
                probs.len()
            )));
        }
        check_mass(&probs, "joint pmf")?;
        Ok(Self { dims, probs })
    }

    pub fn from_weights(dims: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        let p = Pmf::from_weights(weights)?;
        let size: usize = dims.iter().product();
        if size != p.probs.len() {
            return Err(Error::Dimension(format!(
                "joint dims {dims:?} need {size} entries, got {}",
                p.probs.len()
            )));
        }
        Ok(Self {
            dims,
            probs: p.probs,
        })
    }

    /// Product law of independent components.
    pub fn product(components: &[&Pmf]) -> Self {
        let dims: Vec<usize> = components.iter().map(|p| p.alphabet_size()).collect();
        let mut probs = vec![1.0];
        for c in components {
            probs = probs
                .iter()
                .flat_map(|a| c.probs().iter().map(move |b| a * b))
                .collect();
        }
        Self { dims, probs }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        idx.iter()
            .zip(&self.dims)
            .fold(0, |acc, (i, d)| acc * d + i)
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for (slot, d) in idx.iter_mut().zip(&self.dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
        idx
    }

    pub fn prob(&self, idx: &[usize]) -> f64 {
        self.probs[self.flat_index(idx)]
    }

    /// Marginal on the listed axes, in the listed order.
    pub fn marginal(&self, axes: &[usize]) -> Result<JointPmf> {
        if axes.is_empty() || axes.iter().any(|a| *a >= self.rank()) {
            return Err(Error::Dimension(format!(
                "marginal axes {axes:?} invalid for rank {}",
                self.rank()
            )));
        }
        let dims: Vec<usize> = axes.iter().map(|a| self.dims[*a]).collect();
        let size: usize = dims.iter().product();
        let mut probs = vec![0.0; size];
        for (flat, p) in self.probs.iter().enumerate() {
            if *p == 0.0 {
                continue;
            }
            let idx = self.unflatten(flat);
            let target = axes
                .iter()
                .zip(&dims)
                .fold(0, |acc, (a, d)| acc * d + idx[*a]);
            probs[target] += p;
        }
        Ok(JointPmf { dims, probs })
    }

    pub fn marginal_axis(&self, axis: usize) -> Result<Pmf> {
        let m = self.marginal(&[axis])?;
        Pmf::from_weights(m.probs)
    }

    /// Flattens to a single-axis distribution over joint symbols.
    pub fn as_pmf(&self) -> Pmf {
        Pmf {
            probs: self.probs.clone(),
        }
    }

    /// True when the law equals the product of its one-axis marginals within `tol`.
    pub fn factorizes(&self, tol: f64) -> bool {
        let margs: Vec<Pmf> = (0..self.rank())
            .map(|a| self.marginal_axis(a).expect("axis in range"))
            .collect();
        let refs: Vec<&Pmf> = margs.iter().collect();
        let prod = JointPmf::product(&refs);
        prod.probs
            .iter()
            .zip(&self.probs)
            .all(|(a, b)| (a - b).abs() <= tol)
    }
}

impl TryFrom<Dense> for JointPmf {
    type Error = Error;

    fn try_from(d: Dense) -> Result<Self> {
        JointPmf::new(d.dims, d.probs)
    }
}

impl From<JointPmf> for Dense {
    fn from(j: JointPmf) -> Self {
        Dense {
            dims: j.dims,
            probs: j.probs,
        }
    }
}

/// A discrete memoryless channel `P(Y | X)`; row `x` is the output law given input `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Dense", into = "Dense")]
pub struct Dmc {
    input_size: usize,
    output_size: usize,
    rows: Vec<Pmf>,
}

impl Dmc {
    pub fn new(rows: Vec<Pmf>) -> Result<Self> {
        let output_size = rows
            .first()
            .map(Pmf::alphabet_size)
            .ok_or_else(|| Error::Dimension("channel with no inputs".into()))?;
        if rows.iter().any(|r| r.alphabet_size() != output_size) {
            return Err(Error::Dimension("ragged channel rows".into()));
        }
        Ok(Self {
            input_size: rows.len(),
            output_size,
            rows,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Dmc::new(rows.into_iter().map(Pmf::new).collect::<Result<_>>()?)
    }

    pub fn bsc(p: f64) -> Result<Self> {
        Dmc::from_rows(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Binary erasure channel; output 2 is the erasure symbol.
    pub fn bec(e: f64) -> Result<Self> {
        Dmc::from_rows(vec![vec![1.0 - e, 0.0, e], vec![0.0, 1.0 - e, e]])
    }

    pub fn identity(q: usize) -> Self {
        Dmc {
            input_size: q,
            output_size: q,
            rows: (0..q).map(|x| Pmf::point_mass(q, x)).collect(),
        }
    }

    /// Every input produces the same output law.
    pub fn constant(input_size: usize, output: Pmf) -> Self {
        Dmc {
            input_size,
            output_size: output.alphabet_size(),
            rows: vec![output; input_size],
        }
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn rows(&self) -> &[Pmf] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &Pmf {
        &self.rows[x]
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x].prob(y)
    }

    /// Joint law of (X, Y) for the given input law, dims `[|X|, |Y|]`.
    pub fn joint(&self, input: &Pmf) -> Result<JointPmf> {
        if input.alphabet_size() != self.input_size {
            return Err(Error::Dimension(format!(
                "input law has {} symbols, channel expects {}",
                input.alphabet_size(),
                self.input_size
            )));
        }
        let probs = (0..self.input_size)
            .flat_map(|x| {
                let px = input.prob(x);
                self.rows[x].probs().iter().map(move |w| px * w)
            })
            .collect();
        JointPmf::from_weights(vec![self.input_size, self.output_size], probs)
    }

    pub fn output_law(&self, input: &Pmf) -> Result<Pmf> {
        self.joint(input)?.marginal_axis(1)
    }
}

impl TryFrom<Dense> for Dmc {
    type Error = Error;

    fn try_from(d: Dense) -> Result<Self> {
        if d.dims.len() != 2 || d.dims[0] * d.dims[1] != d.probs.len() || d.dims[1] == 0 {
            return Err(Error::Dimension(format!(
                "channel dims {:?} do not match {} entries",
                d.dims,
                d.probs.len()
            )));
        }
        let rows = d
            .probs
            .chunks(d.dims[1])
            .map(|r| Pmf::new(r.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Dmc::new(rows)
    }
}

impl From<Dmc> for Dense {
    fn from(c: Dmc) -> Self {
        Dense {
            dims: vec![c.input_size, c.output_size],
            probs: c.rows.into_iter().flat_map(|r| r.probs).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_mass() {
        assert!(Pmf::new(vec![0.5, 0.4]).is_err());
        assert!(Pmf::new(vec![1.5, -0.5]).is_err());
        assert!(Pmf::new(vec![]).is_err());
        assert!(Pmf::new(vec![0.25; 4]).is_ok());
    }

    #[test]
    fn joint_marginals() {
        let j = JointPmf::new(vec![2, 3], vec![0.1, 0.2, 0.1, 0.3, 0.2, 0.1]).unwrap();
        let x = j.marginal_axis(0).unwrap();
        let y = j.marginal_axis(1).unwrap();
        assert!((x.prob(0) - 0.4).abs() < 1e-15);
        assert!((y.prob(1) - 0.4).abs() < 1e-15);
        let swapped = j.marginal(&[1, 0]).unwrap();
        assert_eq!(swapped.dims(), &[3, 2]);
        assert!((swapped.prob(&[2, 1]) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn dense_json_layout() {
        let c = Dmc::bsc(0.11).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"dims":[2,2],"probs":[0.89,0.11,0.11,0.89]}"#);
        let back: Dmc = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<Dmc>(r#"{"dims":[2,2],"probs":[0.5,0.5,0.2,0.2]}"#).is_err());
        assert!(serde_json::from_str::<Pmf>(r#"{"dims":[3],"probs":[0.5,0.5]}"#).is_err());
    }

    #[test]
    fn product_factorizes() {
        let a = Pmf::new(vec![0.3, 0.7]).unwrap();
        let b = Pmf::new(vec![0.2, 0.5, 0.3]).unwrap();
        let j = JointPmf::product(&[&a, &b]);
        assert!(j.factorizes(1e-12));
        let corr = JointPmf::new(vec![2, 2], vec![0.45, 0.05, 0.05, 0.45]).unwrap();
        assert!(!corr.factorizes(1e-12));
    }
}
