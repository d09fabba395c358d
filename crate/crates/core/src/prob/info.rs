//! Information measures in bits.

use super::pmf::{JointPmf, Pmf};
use crate::error::{Error, Result};

/// `-x log2 x` with the convention `0 log 0 = 0`.
fn plogp(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.log2()
    } else {
        0.0
    }
}

pub fn entropy(p: &Pmf) -> f64 {
    entropy_of(p.probs())
}

pub fn entropy_of(probs: &[f64]) -> f64 {
    probs.iter().map(|x| plogp(*x)).sum::<f64>().max(0.0)
}

/// Binary entropy function.
pub fn h2(p: f64) -> f64 {
    plogp(p) + plogp(1.0 - p)
}

/// Inverse of the binary entropy on `[0, 1/2]`.
pub fn h2_inv(h: f64) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    if h >= 1.0 {
        return 0.5;
    }
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h2(mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `I(X; Y)` for a two-axis joint law.
pub fn mutual_information(j: &JointPmf) -> Result<f64> {
    if j.rank() != 2 {
        return Err(Error::Dimension(format!(
            "mutual information needs two axes, got {}",
            j.rank()
        )));
    }
    let (nx, ny) = (j.dims()[0], j.dims()[1]);
    let px = j.marginal(&[0])?;
    let py = j.marginal(&[1])?;
    let mut total = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            let pxy = j.probs()[x * ny + y];
            if pxy > 0.0 {
                total += pxy * (pxy / (px.probs()[x] * py.probs()[y])).log2();
            }
        }
    }
    Ok(total.max(0.0))
}

/// `H` of the marginal on `axes` of a joint law.
pub fn joint_entropy(j: &JointPmf, axes: &[usize]) -> Result<f64> {
    Ok(entropy_of(j.marginal(axes)?.probs()))
}

/// `I(A; B | C)` where `a`, `b`, `c` are disjoint axis groups of `j` (`c` may be empty).
pub fn conditional_mutual_information(
    j: &JointPmf,
    a: &[usize],
    b: &[usize],
    c: &[usize],
) -> Result<f64> {
    let cat = |x: &[usize], y: &[usize]| -> Vec<usize> { x.iter().chain(y).copied().collect() };
    let ac = cat(a, c);
    let bc = cat(b, c);
    let abc = cat(&ac, b);
    let h_c = if c.is_empty() {
        0.0
    } else {
        joint_entropy(j, c)?
    };
    let v = joint_entropy(j, &ac)? + joint_entropy(j, &bc)? - joint_entropy(j, &abc)? - h_c;
    Ok(v.max(0.0))
}

/// Kullback-Leibler divergence `D(p || q)` in bits; infinite if `p` is not dominated by `q`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| {
            if *b > 0.0 {
                a * (a / b).log2()
            } else {
                f64::INFINITY
            }
        })
        .sum()
}

/// Total-variation distance `(1/2) sum |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Dmc;

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&Pmf::uniform(2)), 1.0);
        assert_eq!(entropy(&Pmf::point_mass(3, 1)), 0.0);
        // -0.11 log2 0.11 - 0.89 log2 0.89
        let h = entropy(&Pmf::bernoulli(0.11).unwrap());
        assert!((h - 0.499_915_958).abs() < 1e-8, "{h}");
    }

    #[test]
    fn mutual_information_examples() {
        let a = Pmf::new(vec![0.3, 0.7]).unwrap();
        let b = Pmf::new(vec![0.1, 0.6, 0.3]).unwrap();
        assert!(mutual_information(&JointPmf::product(&[&a, &b])).unwrap() < 1e-15);
        let id = Dmc::identity(4).joint(&Pmf::uniform(4)).unwrap();
        assert!((mutual_information(&id).unwrap() - 2.0).abs() < 1e-12);
        let bsc = Dmc::bsc(0.1).unwrap().joint(&Pmf::uniform(2)).unwrap();
        assert!((mutual_information(&bsc).unwrap() - (1.0 - h2(0.1))).abs() < 1e-12);
        assert!((1.0 - h2(0.1) - 0.531).abs() < 1e-4);
    }

    #[test]
    fn inverse_binary_entropy() {
        assert!((h2_inv(0.5) - 0.110_027_864).abs() < 1e-8);
        assert!((h2_inv(h2(0.11)) - 0.11).abs() < 1e-12);
    }

    #[test]
    fn conditional_mi_chain_rule() {
        let j = JointPmf::from_weights(vec![2, 2, 2], (1..=8).map(f64::from).collect()).unwrap();
        let i_a_bc = conditional_mutual_information(&j, &[0], &[1, 2], &[]).unwrap();
        let i_a_c = conditional_mutual_information(&j, &[0], &[2], &[]).unwrap();
        let i_a_b_c = conditional_mutual_information(&j, &[0], &[1], &[2]).unwrap();
        assert!((i_a_bc - i_a_c - i_a_b_c).abs() < 1e-12);
    }
}
