use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The region `{R >= 0 : A R <= b}` in bits per channel use.
///
/// Coefficients must be nonnegative, which makes the region closed under
/// coordinate decrease.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolytope", into = "RawPolytope")]
pub struct CapacityPolytope {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawPolytope {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl CapacityPolytope {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::Dimension(format!(
                "polytope has {} rows in A and {} in b",
                a.len(),
                b.len()
            )));
        }
        let dim = a[0].len();
        if dim == 0 || a.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("polytope rows are empty or ragged".into()));
        }
        for (i, row) in a.iter().enumerate() {
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "polytope row {i} has a negative or non-finite coefficient; regions must be downward closed"
                )));
            }
            if !b[i].is_finite() {
                return Err(Error::InvalidArgument(format!("polytope bound {i} is not finite")));
            }
        }
        Ok(Self { a, b })
    }

    /// Box `R_i <= caps_i`.
    pub fn boxed(caps: &[f64]) -> Result<Self> {
        let m = caps.len();
        let a = (0..m)
            .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(a, caps.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.a[0].len()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.a.iter().map(Vec::as_slice).zip(self.b.iter().copied())
    }

    /// With nonnegative coefficients the region is nonempty iff it contains 0.
    pub fn is_empty(&self) -> bool {
        self.b.iter().any(|v| *v < 0.0)
    }

    pub fn contains(&self, r: &[f64], tol: f64) -> bool {
        r.len() == self.dim()
            && r.iter().all(|v| *v >= -tol)
            && self
                .rows()
                .all(|(row, b)| row.iter().zip(r).map(|(x, y)| x * y).sum::<f64>() <= b + tol)
    }
}

impl TryFrom<RawPolytope> for CapacityPolytope {
    type Error = Error;

    fn try_from(raw: RawPolytope) -> Result<Self> {
        Self::new(raw.a, raw.b)
    }
}

impl From<CapacityPolytope> for RawPolytope {
    fn from(p: CapacityPolytope) -> Self {
        RawPolytope { a: p.a, b: p.b }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_coefficients() {
        assert!(CapacityPolytope::new(vec![vec![1.0, -1.0]], vec![1.0]).is_err());
    }

    #[test]
    fn membership_and_json() {
        let p = CapacityPolytope::new(vec![vec![1.0, 1.0], vec![1.0, 0.0]], vec![1.0, 0.6]).unwrap();
        assert!(p.contains(&[0.5, 0.5], 0.0));
        assert!(!p.contains(&[0.7, 0.1], 0.0));
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"A\""));
        let back: CapacityPolytope = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }
}
