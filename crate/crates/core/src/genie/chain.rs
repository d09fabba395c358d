use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{group_convolve, DistortionMeasure, FiniteAbelianGroup, Pmf};

/// Nested additive noises `U_K = V_K`, `U_k = U_{k+1} + V_k` with independent `V`s.
///
/// Index 0 is the coarsest level (largest distortion). `expected[k] = E d(U_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxChain {
    pub group: FiniteAbelianGroup,
    pub measure: DistortionMeasure,
    pub budgets: Vec<f64>,
    pub v_laws: Vec<Pmf>,
    pub u_laws: Vec<Pmf>,
    pub expected: Vec<f64>,
}

impl AuxChain {
    pub fn len(&self) -> usize {
        self.v_laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v_laws.is_empty()
    }
}

/// U laws of a chain without budget checks.
pub fn chain_laws(v_laws: &[Pmf], g: &FiniteAbelianGroup) -> Result<Vec<Pmf>> {
    let k = v_laws.len();
    if k == 0 {
        return Err(Error::InvalidArgument("aux chain needs at least one noise law".into()));
    }
    let mut u = vec![v_laws[k - 1].clone(); k];
    for j in (0..k - 1).rev() {
        u[j] = group_convolve(&u[j + 1], &v_laws[j], g)?;
    }
    Ok(u)
}

/// Builds the chain and checks `E d(U_k) <= D_k` (within 1e-12) at every level.
pub fn build_aux_chain(
    v_laws: Vec<Pmf>,
    g: &FiniteAbelianGroup,
    d: &DistortionMeasure,
    budgets: &[f64],
) -> Result<AuxChain> {
    if budgets.len() != v_laws.len() {
        return Err(Error::Dimension(format!(
            "{} noise laws for {} distortion budgets",
            v_laws.len(),
            budgets.len()
        )));
    }
    let cost = d.require_difference("aux chain")?;
    if cost.len() != g.order() {
        return Err(Error::Dimension("measure and group differ in size".into()));
    }
    let u_laws = chain_laws(&v_laws, g)?;
    let expected: Vec<f64> = u_laws.iter().map(|u| u.expect(|z| cost[z])).collect();
    for (k, (e, b)) in expected.iter().zip(budgets).enumerate() {
        if *e > b + 1e-12 {
            return Err(Error::ChainBudget {
                k: k + 1,
                expected: *e,
                budget: *b,
            });
        }
    }
    Ok(AuxChain {
        group: g.clone(),
        measure: d.clone(),
        budgets: budgets.to_vec(),
        v_laws,
        u_laws,
        expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_chain() {
        let g = FiniteAbelianGroup::cyclic(2);
        let d = DistortionMeasure::hamming(2);
        let v = vec![Pmf::bernoulli(0.1).unwrap(), Pmf::bernoulli(0.2).unwrap()];
        let c = build_aux_chain(v, &g, &d, &[0.3, 0.2]).unwrap();
        assert!((c.u_laws[1].prob(1) - 0.2).abs() < 1e-15);
        assert!((c.u_laws[0].prob(1) - 0.26).abs() < 1e-15);
    }

    #[test]
    fn budget_violation_names_level() {
        let g = FiniteAbelianGroup::cyclic(2);
        let d = DistortionMeasure::hamming(2);
        let v = vec![Pmf::bernoulli(0.1).unwrap(), Pmf::bernoulli(0.2).unwrap()];
        match build_aux_chain(v, &g, &d, &[0.25, 0.2]) {
            Err(Error::ChainBudget { k, .. }) => assert_eq!(k, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_level_is_its_noise() {
        let g = FiniteAbelianGroup::cyclic(3);
        let d = DistortionMeasure::hamming(3);
        let v = Pmf::new(vec![0.8, 0.1, 0.1]).unwrap();
        let c = build_aux_chain(vec![v.clone()], &g, &d, &[0.2]).unwrap();
        assert_eq!(c.u_laws[0], v);
    }
}
