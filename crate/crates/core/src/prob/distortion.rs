use serde::{Deserialize, Serialize};

use super::group::FiniteAbelianGroup;
use super::pmf::Pmf;
use crate::error::{Error, Result};

/// A per-letter distortion `d(s, ŝ)`.
///
/// Difference measures also carry `diff`, with `d(s, ŝ) = diff[s - ŝ]` in the
/// group used to build them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct DistortionMeasure {
    matrix: Vec<Vec<f64>>,
    diff: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawMeasure {
    matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    difference: Option<Vec<f64>>,
}

impl DistortionMeasure {
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let cols = matrix.first().map(Vec::len).unwrap_or(0);
        if cols == 0 || matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("distortion matrix is empty or ragged".into()));
        }
        for (s, row) in matrix.iter().enumerate() {
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "distortion row {s} has a negative or non-finite entry"
                )));
            }
            if !row.iter().any(|v| *v == 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "distortion row {s} has no zero entry"
                )));
            }
        }
        Ok(Self { matrix, diff: None })
    }

    /// Difference measure `d(s, ŝ) = diff[s - ŝ]` on `g`; requires `diff[identity] = 0`.
    pub fn difference(diff: Vec<f64>, g: &FiniteAbelianGroup) -> Result<Self> {
        let q = g.order();
        if diff.len() != q {
            return Err(Error::Dimension(format!(
                "difference vector has {} entries for group of order {q}",
                diff.len()
            )));
        }
        if diff[g.identity()] != 0.0 {
            return Err(Error::InvalidArgument(
                "difference measure must vanish at the identity".into(),
            ));
        }
        let matrix = (0..q)
            .map(|s| (0..q).map(|t| diff[g.sub(s, t)]).collect())
            .collect();
        let mut m = Self::new(matrix)?;
        m.diff = Some(diff);
        Ok(m)
    }

    pub fn hamming(q: usize) -> Self {
        let g = FiniteAbelianGroup::cyclic(q);
        let diff = (0..q).map(|k| if k == 0 { 0.0 } else { 1.0 }).collect();
        Self::difference(diff, &g).expect("hamming is valid")
    }

    /// Squared error on `Z_len` with centered representatives scaled by `spacing`.
    pub fn quadratic_grid(len: usize, spacing: f64) -> Self {
        let g = FiniteAbelianGroup::cyclic(len);
        Self::difference(quadratic_costs(len, spacing), &g).expect("quadratic is valid")
    }

    pub fn source_size(&self) -> usize {
        self.matrix.len()
    }

    pub fn recon_size(&self) -> usize {
        self.matrix[0].len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn d(&self, s: usize, s_hat: usize) -> f64 {
        self.matrix[s][s_hat]
    }

    /// Cost vector `d(z)` of a difference measure.
    pub fn difference_vector(&self) -> Option<&[f64]> {
        self.diff.as_deref()
    }

    /// The cost vector, or an error naming `what` when this is not a difference measure.
    pub fn require_difference(&self, what: &str) -> Result<&[f64]> {
        self.difference_vector().ok_or_else(|| {
            Error::InvalidArgument(format!("{what} needs a difference distortion measure"))
        })
    }

    /// Rate-zero distortion `min_ŝ E d(S, ŝ)`.
    pub fn d_max(&self, src: &Pmf) -> Result<f64> {
        self.check_source(src)?;
        Ok(self.d_max_with_arg(src).0)
    }

    /// `d_max` together with the lowest-index minimizing reconstruction letter.
    pub(crate) fn d_max_with_arg(&self, src: &Pmf) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for t in 0..self.recon_size() {
            let v = src.expect(|s| self.matrix[s][t]);
            if v < best.0 - 1e-12 {
                best = (v, t);
            }
        }
        best
    }

    pub fn check_source(&self, src: &Pmf) -> Result<()> {
        if src.alphabet_size() != self.source_size() {
            return Err(Error::Dimension(format!(
                "source has {} symbols, distortion measure expects {}",
                src.alphabet_size(),
                self.source_size()
            )));
        }
        Ok(())
    }

    /// Expected cost `E d(Z)` of a difference measure under law `z`.
    pub fn expected_cost(&self, z: &Pmf) -> Result<f64> {
        let diff = self.require_difference("expected_cost")?;
        if z.alphabet_size() != diff.len() {
            return Err(Error::Dimension("law and cost vector differ in size".into()));
        }
        Ok(z.expect(|k| diff[k]))
    }
}

/// Squared centered representative of each element of `Z_len`, scaled by `spacing`.
pub fn quadratic_costs(len: usize, spacing: f64) -> Vec<f64> {
    (0..len)
        .map(|k| {
            let c = centered(k, len) as f64 * spacing;
            c * c
        })
        .collect()
}

/// Centered representative of `k` in `Z_len`, in `(-len/2, len/2]`.
pub fn centered(k: usize, len: usize) -> i64 {
    let k = k as i64;
    let len = len as i64;
    if 2 * k > len {
        k - len
    } else {
        k
    }
}

impl TryFrom<RawMeasure> for DistortionMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        let m = DistortionMeasure::new(raw.matrix)?;
        if let Some(diff) = raw.difference {
            let g = FiniteAbelianGroup::cyclic(diff.len());
            let rebuilt = DistortionMeasure::difference(diff, &g)?;
            if rebuilt.matrix != m.matrix {
                return Err(Error::InvalidArgument(
                    "difference vector does not reproduce the matrix".into(),
                ));
            }
            return Ok(rebuilt);
        }
        Ok(m)
    }
}

impl From<DistortionMeasure> for RawMeasure {
    fn from(m: DistortionMeasure) -> Self {
        RawMeasure {
            matrix: m.matrix,
            difference: m.diff,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_need_a_zero() {
        assert!(DistortionMeasure::new(vec![vec![0.0, 1.0], vec![1.0, 0.5]]).is_err());
        assert!(DistortionMeasure::new(vec![vec![0.0, -1.0], vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn hamming_d_max() {
        let h = DistortionMeasure::hamming(2);
        assert_eq!(h.d_max(&Pmf::uniform(2)).unwrap(), 0.5);
        assert!((h.d_max(&Pmf::bernoulli(0.3).unwrap()).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn difference_reconstructs_matrix() {
        let g = FiniteAbelianGroup::cyclic(5);
        let diff = vec![0.0, 1.0, 4.0, 4.0, 1.0];
        let m = DistortionMeasure::difference(diff.clone(), &g).unwrap();
        for s in 0..5 {
            for t in 0..5 {
                assert_eq!(m.d(s, t), diff[g.sub(s, t)]);
            }
        }
        assert_eq!(quadratic_costs(5, 1.0), diff);
        let json = serde_json::to_string(&m).unwrap();
        let back: DistortionMeasure = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
