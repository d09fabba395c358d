use proptest::prelude::*;

use sepnet_core::genie::{
    aggregate_throughput, build_aux_chain, chain_laws, dms_rates, genie_rate_matrix, induce_orders,
    optimize_aux_chain, quadratic_genie_rate_matrix, verify_rate_loss_bounds, ChainSearch,
};
use sepnet_core::prob::{DistortionMeasure, Dmc, FiniteAbelianGroup, Pmf};
use sepnet_core::solvers::{constrained_additive_capacity, SolverConfig};

fn pmf(size: usize) -> impl Strategy<Value = Pmf> {
    prop::collection::vec(0.01f64..1.0, size).prop_map(|w| Pmf::from_weights(w).unwrap())
}

/// Laws with at least half their mass at the identity.
fn peaked(size: usize) -> impl Strategy<Value = Pmf> {
    prop::collection::vec(0.0f64..1.0, size).prop_map(|mut w| {
        w[0] = w.iter().sum::<f64>() + 0.01;
        Pmf::from_weights(w).unwrap()
    })
}

fn cfg() -> SolverConfig {
    SolverConfig::default().with_tolerance(1e-8)
}

fn mode_at_zero(p: &Pmf) -> bool {
    p.probs().iter().all(|v| *v <= p.prob(0))
}

#[test]
fn orders_sort_down_and_merge_ties() {
    let d = vec![vec![0.3, 0.3, 0.1, 0.0], vec![0.0, 0.2, 0.4, 0.0]];
    let o = induce_orders(&d, &[vec![3, 2, 1], vec![3, 2]]).unwrap();
    assert_eq!(o.slots(0), 2);
    assert_eq!(o.per_source[0][0].nodes, vec![1, 2]);
    assert_eq!(o.per_source[0][1].nodes, vec![3]);
    assert_eq!(o.reach(0, 0), 3);
    assert_eq!(o.per_source[1][0].nodes, vec![3]);
    assert!((o.per_source[1][1].distortion - 0.2).abs() < 1e-15);
    assert!(induce_orders(&d, &[vec![5]]).is_err());
}

#[test]
fn quadratic_aggregate_counts_common_links() {
    let d = vec![vec![0.3, 0.3, 0.1], vec![0.5, 0.0, 0.0]];
    let o = induce_orders(&d, &[vec![1, 2, 3], vec![1]]).unwrap();
    let m = quadratic_genie_rate_matrix(&o, 3).unwrap();
    assert_eq!(m.defined_count(), 3);
    assert!(m.entries[1].iter().all(Option::is_none));
    assert!((aggregate_throughput(&m, &o).unwrap() - 0.5 * (3.0 + 1.0)).abs() < 1e-15);
}

#[test]
fn rate_matrix_entries_are_chain_capacities() {
    let g = FiniteAbelianGroup::cyclic(2);
    let h = DistortionMeasure::hamming(2);
    let d = vec![vec![0.25, 0.1], vec![0.2, 0.2]];
    let o = induce_orders(&d, &[vec![1, 2], vec![1]]).unwrap();
    let c = cfg();
    let chain = optimize_aux_chain(&g, &h, &[0.25, 0.1], &ChainSearch::default(), &c).unwrap();
    let m = genie_rate_matrix(&o, &[Some(chain.clone()), None], 2, &c).unwrap();
    for (level, node) in [(0, 1), (1, 2)] {
        let direct = constrained_additive_capacity(&chain.u_laws[level], &h, chain.budgets[level], &g, &c).unwrap();
        assert!((m.entries[0][node - 1].unwrap() - direct.value).abs() < 1e-12);
    }
    assert_eq!(m.defined_count(), 2);
    assert!(genie_rate_matrix(&o, &[None, None], 2, &c).is_err());
}

#[test]
fn chain_budget_violation_is_reported() {
    let g = FiniteAbelianGroup::cyclic(2);
    let h = DistortionMeasure::hamming(2);
    let v = vec![Pmf::bernoulli(0.1).unwrap(), Pmf::bernoulli(0.1).unwrap()];
    assert!(build_aux_chain(v.clone(), &g, &h, &[0.2, 0.1]).is_ok());
    assert!(build_aux_chain(v, &g, &h, &[0.15, 0.1]).is_err());
}

#[test]
fn rate_loss_bounds_hold_for_a_binary_chain() {
    let g = FiniteAbelianGroup::cyclic(2);
    let h = DistortionMeasure::hamming(2);
    let c = cfg();
    let budgets = [0.3, 0.15, 0.05];
    let chain = optimize_aux_chain(&g, &h, &budgets, &ChainSearch::default(), &c).unwrap();
    let src = Pmf::bernoulli(0.4).unwrap();
    let recon: Vec<Dmc> = budgets.iter().map(|b| Dmc::bsc(b * 0.9).unwrap()).collect();
    let report = verify_rate_loss_bounds(&src, &recon, &chain, &c).unwrap();
    assert_eq!(report.violations, 0, "min slack {}", report.min_slack);
    assert_eq!(report.slacks.len(), 9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hamming_chain_expectation_grows_toward_coarse_levels(v in prop::collection::vec(peaked(4), 3)) {
        let g = FiniteAbelianGroup::cyclic(4);
        let u = chain_laws(&v, &g).unwrap();
        let mut checked = 0;
        for k in 0..2 {
            if mode_at_zero(&u[k + 1]) {
                // E d(U) = 1 - U(0) for Hamming
                prop_assert!(u[k].prob(0) <= u[k + 1].prob(0) + 1e-12);
                checked += 1;
            }
        }
        prop_assert!(checked > 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dms_rates_telescope(src in pmf(3), v in prop::collection::vec(pmf(3), 3)) {
        let g = FiniteAbelianGroup::cyclic(3);
        let h = DistortionMeasure::hamming(3);
        let u = chain_laws(&v, &g).unwrap();
        let budgets: Vec<f64> = u.iter().map(|l| 1.0 - l.prob(0) + 1e-9).collect();
        let chain = build_aux_chain(v, &g, &h, &budgets).unwrap();
        let r = dms_rates(&src, &chain, &cfg()).unwrap();
        let total: f64 = r.information.iter().sum();
        prop_assert!(r.telescoping_error < 1e-9);
        prop_assert!((total - r.direct_information).abs() < 1e-9);
        prop_assert_eq!(r.rates.len(), 3);
    }
}
