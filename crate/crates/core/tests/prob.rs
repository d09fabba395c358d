use proptest::prelude::*;

use sepnet_core::prob::info::mutual_information;
use sepnet_core::prob::{
    entropy, group_convolve, is_strongly_typical, sample_typical_uniform, DistortionMeasure, FiniteAbelianGroup,
    JointPmf, Pmf, SeededRng,
};

fn pmf(size: usize) -> impl Strategy<Value = Pmf> {
    prop::collection::vec(0.01f64..1.0, size).prop_map(|w| Pmf::from_weights(w).unwrap())
}

proptest! {
    #[test]
    fn entropy_is_concave(p in pmf(4), q in pmf(4), lambda in 0.0f64..1.0) {
        let mix = p.mix(&q, lambda).unwrap();
        prop_assert!(entropy(&mix) >= lambda * entropy(&p) + (1.0 - lambda) * entropy(&q) - 1e-12);
    }

    #[test]
    fn mutual_information_from_entropies(w in prop::collection::vec(0.0f64..1.0, 6)) {
        prop_assume!(w.iter().sum::<f64>() > 0.1);
        let j = JointPmf::from_weights(vec![2, 3], w).unwrap();
        let via_entropies = entropy(&j.marginal_axis(0).unwrap()) + entropy(&j.marginal_axis(1).unwrap())
            - entropy(&j.as_pmf());
        prop_assert!((mutual_information(&j).unwrap() - via_entropies).abs() < 1e-10);
    }

    #[test]
    fn convolution_commutes_and_associates(a in pmf(5), b in pmf(5), c in pmf(5)) {
        let g = FiniteAbelianGroup::cyclic(5);
        let ab = group_convolve(&a, &b, &g).unwrap();
        let ba = group_convolve(&b, &a, &g).unwrap();
        let left = group_convolve(&ab, &c, &g).unwrap();
        let right = group_convolve(&a, &group_convolve(&b, &c, &g).unwrap(), &g).unwrap();
        for z in 0..5 {
            prop_assert!((ab.prob(z) - ba.prob(z)).abs() < 1e-12);
            prop_assert!((left.prob(z) - right.prob(z)).abs() < 1e-12);
        }
    }

    #[test]
    fn difference_measure_rebuilds_matrix(tail in prop::collection::vec(0.0f64..3.0, 5)) {
        let g = FiniteAbelianGroup::cyclic(6);
        let mut diff = vec![0.0];
        diff.extend(tail);
        let d = DistortionMeasure::difference(diff.clone(), &g).unwrap();
        for s in 0..6 {
            for t in 0..6 {
                prop_assert_eq!(d.d(s, t), diff[g.sub(s, t)]);
            }
        }
    }

    #[test]
    fn typical_samples_are_typical(p in pmf(3), n in 50usize..400, seed in any::<u64>()) {
        let delta = 0.08;
        if let Ok(x) = sample_typical_uniform(&p, n, delta, &SeededRng::new(seed)) {
            prop_assert_eq!(x.len(), n);
            prop_assert!(is_strongly_typical(&x, &p, delta));
        }
    }
}

#[test]
fn product_group_has_valid_axioms() {
    let g = FiniteAbelianGroup::cyclic(2).product(&FiniteAbelianGroup::cyclic(3));
    g.check_axioms().unwrap();
    assert_eq!(g.order(), 6);
}
