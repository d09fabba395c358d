use serde::{Deserialize, Serialize};

use super::pmf::Pmf;
use crate::error::{Error, Result};

/// A finite Abelian group given by its addition table on `{0, .., order - 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteAbelianGroup {
    order: usize,
    table: Vec<usize>,
    identity: usize,
    #[serde(skip)]
    negation: Vec<usize>,
}

impl FiniteAbelianGroup {
    /// Builds a group from a row-major addition table and checks every axiom.
    pub fn from_table(order: usize, table: Vec<usize>) -> Result<Self> {
        if order == 0 || table.len() != order * order {
            return Err(Error::Dimension(format!(
                "addition table for order {order} needs {} entries, got {}",
                order * order,
                table.len()
            )));
        }
        let identity = (0..order)
            .find(|e| (0..order).all(|a| table[e * order + a] == a))
            .ok_or_else(|| Error::InvalidArgument("table has no identity".into()))?;
        let mut g = Self {
            order,
            table,
            identity,
            negation: Vec::new(),
        };
        g.check_axioms()?;
        g.negation = (0..order)
            .map(|a| {
                (0..order)
                    .find(|b| g.add(a, *b) == identity)
                    .expect("inverse checked")
            })
            .collect();
        Ok(g)
    }

    /// The cyclic group Z_q.
    pub fn cyclic(q: usize) -> Self {
        assert!(q > 0, "cyclic group needs q > 0");
        let table = (0..q * q).map(|k| (k / q + k % q) % q).collect();
        Self {
            order: q,
            table,
            identity: 0,
            negation: (0..q).map(|a| (q - a) % q).collect(),
        }
    }

    /// Direct product; element `(a, b)` is encoded as `a * other.order + b`.
    pub fn product(&self, other: &FiniteAbelianGroup) -> Self {
        let (p, q) = (self.order, other.order);
        let n = p * q;
        let mut table = vec![0; n * n];
        for x in 0..n {
            for y in 0..n {
                let a = self.add(x / q, y / q);
                let b = other.add(x % q, y % q);
                table[x * n + y] = a * q + b;
            }
        }
        let identity = self.identity * q + other.identity;
        let negation = (0..n)
            .map(|x| self.neg(x / q) * q + other.neg(x % q))
            .collect();
        Self {
            order: n,
            table,
            identity,
            negation,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b]
    }

    pub fn neg(&self, a: usize) -> usize {
        self.negation[a]
    }

    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    /// Scans the table for closure, associativity, commutativity, identity and inverses.
    pub fn check_axioms(&self) -> Result<()> {
        let n = self.order;
        let bad = |what: &str| Err(Error::InvalidArgument(format!("group table: {what}")));
        if self.table.iter().any(|v| *v >= n) {
            return bad("not closed");
        }
        for a in 0..n {
            if self.add(a, self.identity) != a || self.add(self.identity, a) != a {
                return bad("identity fails");
            }
            if !(0..n).any(|b| self.add(a, b) == self.identity) {
                return bad("missing inverse");
            }
            for b in 0..n {
                if self.add(a, b) != self.add(b, a) {
                    return bad("not commutative");
                }
                for c in 0..n {
                    if self.add(self.add(a, b), c) != self.add(a, self.add(b, c)) {
                        return bad("not associative");
                    }
                }
            }
        }
        Ok(())
    }

    fn check_law(&self, p: &Pmf) -> Result<()> {
        if p.alphabet_size() != self.order {
            return Err(Error::Dimension(format!(
                "law on {} symbols used with group of order {}",
                p.alphabet_size(),
                self.order
            )));
        }
        Ok(())
    }

    /// Law of `A + B` for independent `A ~ a`, `B ~ b`.
    pub fn convolve(&self, a: &Pmf, b: &Pmf) -> Result<Pmf> {
        self.check_law(a)?;
        self.check_law(b)?;
        let mut out = vec![0.0; self.order];
        for (x, px) in a.probs().iter().enumerate() {
            if *px == 0.0 {
                continue;
            }
            for (y, py) in b.probs().iter().enumerate() {
                out[self.add(x, y)] += px * py;
            }
        }
        Pmf::from_weights(out)
    }

    /// Law of `A + c` for a fixed element `c`.
    pub fn shift(&self, a: &Pmf, c: usize) -> Result<Pmf> {
        self.check_law(a)?;
        let mut out = vec![0.0; self.order];
        for (x, px) in a.probs().iter().enumerate() {
            out[self.add(x, c)] += px;
        }
        Pmf::new(out)
    }
}

/// Law of the group sum of two independent variables.
pub fn group_convolve(a: &Pmf, b: &Pmf, g: &FiniteAbelianGroup) -> Result<Pmf> {
    g.convolve(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_and_product_satisfy_axioms() {
        for q in 1..6 {
            FiniteAbelianGroup::cyclic(q).check_axioms().unwrap();
        }
        let g = FiniteAbelianGroup::cyclic(2).product(&FiniteAbelianGroup::cyclic(3));
        g.check_axioms().unwrap();
        assert_eq!(g.order(), 6);
        for a in 0..6 {
            assert_eq!(g.add(a, g.neg(a)), g.identity());
        }
    }

    #[test]
    fn table_without_inverse_is_rejected() {
        // max on {0, 1}: identity 0, but 1 has no inverse
        assert!(FiniteAbelianGroup::from_table(2, vec![0, 1, 1, 1]).is_err());
        let z3 = FiniteAbelianGroup::from_table(3, vec![0, 1, 2, 1, 2, 0, 2, 0, 1]).unwrap();
        assert_eq!(z3, FiniteAbelianGroup::cyclic(3));
    }

    #[test]
    fn convolution_examples() {
        let g = FiniteAbelianGroup::cyclic(4);
        let p = Pmf::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let u = Pmf::uniform(4);
        let c = g.convolve(&p, &u).unwrap();
        assert!(c.probs().iter().all(|v| (v - 0.25).abs() < 1e-15));
        let same = g.convolve(&p, &Pmf::point_mass(4, 0)).unwrap();
        assert_eq!(same.probs(), p.probs());
        let pm = g
            .convolve(&Pmf::point_mass(4, 3), &Pmf::point_mass(4, 2))
            .unwrap();
        assert_eq!(pm, Pmf::point_mass(4, 1));
        let z2 = FiniteAbelianGroup::cyclic(2);
        let b = z2
            .convolve(&Pmf::bernoulli(0.2).unwrap(), &Pmf::bernoulli(0.1).unwrap())
            .unwrap();
        assert!((b.prob(1) - 0.26).abs() < 1e-15);
        assert!(g.convolve(&p, &Pmf::uniform(3)).is_err());
    }
}
