use proptest::prelude::*;

use sepnet_core::prob::info::{h2, mutual_information};
use sepnet_core::prob::{DistortionMeasure, Dmc, FiniteAbelianGroup, Pmf};
use sepnet_core::solvers::{
    capacity_trace, channel_capacity, constrained_additive_capacity, distortion_rate, gibbs_law, rate_distortion,
    worst_noise_capacity, SolverConfig,
};

fn pmf(size: usize) -> impl Strategy<Value = Pmf> {
    prop::collection::vec(0.02f64..1.0, size).prop_map(|w| Pmf::from_weights(w).unwrap())
}

fn dmc(nx: usize, ny: usize) -> impl Strategy<Value = Dmc> {
    prop::collection::vec(pmf(ny), nx).prop_map(|rows| Dmc::new(rows).unwrap())
}

fn cfg() -> SolverConfig {
    SolverConfig::default().with_tolerance(1e-7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn capacity_brackets_and_dominates_inputs(ch in dmc(3, 3), p in pmf(3)) {
        let r = channel_capacity(&ch, &cfg()).unwrap();
        prop_assert!(r.lower_bound <= r.value + 1e-12 && r.value <= r.upper_bound + 1e-12);
        prop_assert!(r.value <= 3f64.log2() + 1e-12);
        prop_assert!(mutual_information(&ch.joint(&p).unwrap()).unwrap() <= r.upper_bound + 1e-9);
    }

    #[test]
    fn capacity_lower_bound_never_decreases(ch in dmc(3, 4)) {
        let t = capacity_trace(&ch, &cfg()).unwrap();
        prop_assert!(t.windows(2).all(|w| w[1].0 >= w[0].0 - 1e-12));
    }

    #[test]
    fn rd_is_nonincreasing_and_convex(src in pmf(3)) {
        let d = DistortionMeasure::hamming(3);
        let grid: Vec<f64> = (0..=8).map(|k| 0.05 + 0.05 * k as f64).collect();
        let r: Vec<f64> = grid.iter().map(|t| rate_distortion(&src, &d, *t, &cfg()).unwrap().value).collect();
        prop_assert!(r.windows(2).all(|w| w[1] <= w[0] + 1e-7));
        prop_assert!(r.windows(3).all(|w| w[1] <= 0.5 * (w[0] + w[2]) + 1e-6));
    }

    #[test]
    fn dr_inverts_rd(src in pmf(2), frac in 0.1f64..0.9) {
        let d = DistortionMeasure::hamming(2);
        let d_max = d.d_max(&src).unwrap();
        let target = frac * d_max;
        let c = cfg();
        let rate = rate_distortion(&src, &d, target, &c).unwrap().value;
        let back = distortion_rate(&src, &d, rate, &c).unwrap().value;
        prop_assert!((back - target).abs() <= 1e-4, "{} vs {}", back, target);
    }

    #[test]
    fn additive_capacity_grows_with_budget(noise in pmf(4), lo in 0.05f64..0.5, extra in 0.0f64..0.5) {
        let g = FiniteAbelianGroup::cyclic(4);
        let d = DistortionMeasure::difference(vec![0.0, 1.0, 2.0, 1.0], &g).unwrap();
        let a = constrained_additive_capacity(&noise, &d, lo, &g, &cfg()).unwrap();
        let b = constrained_additive_capacity(&noise, &d, lo + extra, &g, &cfg()).unwrap();
        prop_assert!(b.upper_bound >= a.lower_bound - 1e-9);
    }

    #[test]
    fn gibbs_law_meets_budget(budget in 0.05f64..1.2) {
        let cost = [0.0, 1.0, 4.0, 4.0, 1.0];
        let p = gibbs_law(&cost, budget).unwrap();
        prop_assert!(p.expect(|z| cost[z]) <= budget + 1e-9);
    }
}

#[test]
fn worst_noise_below_explicit_noises() {
    let g = FiniteAbelianGroup::cyclic(6);
    let d = DistortionMeasure::difference(vec![0.0, 1.0, 2.0, 3.0, 2.0, 1.0], &g).unwrap();
    let budget = 0.7;
    let c = cfg();
    let worst = worst_noise_capacity(&g, &d, budget, &c).unwrap();
    let cost = d.difference_vector().unwrap();
    for n0 in [
        gibbs_law(cost, budget).unwrap(),
        Pmf::new(vec![0.65, 0.35, 0.0, 0.0, 0.0, 0.0]).unwrap(),
        Pmf::new(vec![0.5, 0.15, 0.0, 0.0, 0.0, 0.35]).unwrap(),
        Pmf::new(vec![0.8, 0.0, 0.0, 0.0, 0.0, 0.2]).unwrap(),
    ] {
        assert!(d.expected_cost(&n0).unwrap() <= budget + 1e-12);
        let explicit = constrained_additive_capacity(&n0, &d, budget, &g, &c).unwrap();
        assert!(worst.value <= explicit.value + 1e-6, "{} > {}", worst.value, explicit.value);
    }
}

#[test]
fn binary_closed_forms() {
    let c = cfg();
    let bsc = channel_capacity(&Dmc::bsc(0.2).unwrap(), &c).unwrap();
    assert!((bsc.value - (1.0 - h2(0.2))).abs() < 1e-7);
    let bec = channel_capacity(&Dmc::bec(0.3).unwrap(), &c).unwrap();
    assert!((bec.value - 0.7).abs() < 1e-7);
    let src = Pmf::bernoulli(0.3).unwrap();
    let r = rate_distortion(&src, &DistortionMeasure::hamming(2), 0.1, &c).unwrap();
    assert!((r.value - (h2(0.3) - h2(0.1))).abs() < 1e-6);
}

#[test]
fn skewed_ternary_rd_matches_oracle() {
    // independent constrained-minimization values; closed form H - h(D) - D below (m-1) p_min
    let src = Pmf::new(vec![0.7335325693466276, 0.2188606721540683, 0.04760675849930404]).unwrap();
    let d = DistortionMeasure::hamming(3);
    let h: f64 = src.probs().iter().map(|p| -p * p.log2()).sum();
    let c = cfg();
    for (target, oracle) in [
        (0.05, h - h2(0.05) - 0.05),
        (0.15, 0.2717175),
        (0.20, 0.1365049),
        (0.25, 0.0299149),
    ] {
        let r = rate_distortion(&src, &d, target, &c).unwrap();
        assert!(r.converged);
        assert!((r.value - oracle).abs() < 1e-5, "D={target}: {} vs {oracle}", r.value);
    }
}
