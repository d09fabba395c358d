use std::path::PathBuf;

use proptest::prelude::*;

use sepnet_core::network::{
    edge_capacities, frontier_table, max_flow, min_cut_bound, separation_feasible_unicast, CapacityPolytope,
    DistortionMatrix, NetworkSpec,
};
use sepnet_core::prob::info::h2;
use sepnet_core::prob::{DistortionMeasure, Dmc, Pmf};
use sepnet_core::solvers::SolverConfig;

fn fixture(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name].iter().collect();
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn cfg() -> SolverConfig {
    SolverConfig::default().with_tolerance(1e-8)
}

#[test]
fn fixtures_validate_and_round_trip() {
    for name in ["fig2.json", "fig4.json", "fig5.json", "fig7.json", "p2p_bsc005.json", "p2p_rep3.json"] {
        let spec = NetworkSpec::from_json(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        spec.validate().unwrap();
        let text = spec.to_json().unwrap();
        let back = NetworkSpec::from_json(&text).unwrap();
        assert_eq!(back, spec, "{name}");
        assert_eq!(back.to_json().unwrap(), text, "{name}");
    }
}

#[test]
fn distortion_matrix_resolves_against_its_network() {
    let spec = NetworkSpec::from_json(&fixture("fig5.json")).unwrap();
    let m = DistortionMatrix::from_json(&fixture("d5.json")).unwrap();
    let d = m.resolve(&spec).unwrap();
    assert_eq!(d.len(), spec.sources.len());
    assert!(d.iter().all(|row| row.len() == spec.nodes));
}

#[test]
fn fig2_edge_capacities_and_cuts() {
    let spec = NetworkSpec::from_json(&fixture("fig2.json")).unwrap();
    let caps = edge_capacities(&spec, &cfg()).unwrap();
    let c = 1.0 - h2(0.05);
    assert_eq!(caps.len(), 4);
    for e in &caps {
        assert!((e.capacity.value - c).abs() < 1e-7, "{} -> {}", e.from, e.to);
    }
    for (s, t) in [(1, 3), (1, 4), (2, 3), (2, 4)] {
        let cut = min_cut_bound(&spec, s, t, &cfg()).unwrap();
        let out: f64 = caps.iter().filter(|e| e.from == s).map(|e| e.capacity.value).sum();
        assert!(cut <= out + 1e-12);
        assert!((cut - c).abs() < 1e-7);
    }
}

#[test]
fn frontier_nonincreasing_in_kappa() {
    let src = Pmf::uniform(2);
    let d = DistortionMeasure::hamming(2);
    let ch = Dmc::bsc(0.11).unwrap();
    let kappas: Vec<f64> = (0..=12).map(|k| 0.25 * k as f64).collect();
    let rows = frontier_table(&src, &d, &ch, &kappas, &cfg()).unwrap();
    assert!((rows[0].distortion - 0.5).abs() < 1e-12);
    assert!(rows.windows(2).all(|w| w[1].distortion <= w[0].distortion + 1e-9));
    assert!((rows[4].distortion - 0.11).abs() < 1e-4);
}

#[test]
fn unicast_feasibility_is_monotone_in_distortion() {
    let spec = NetworkSpec::from_json(&fixture("fig4.json")).unwrap();
    let region = CapacityPolytope::boxed(&[0.4, 0.3, 0.5]).unwrap();
    let grid: Vec<f64> = (1..=10).map(|k| 0.05 * k as f64).collect();
    let flags: Vec<bool> = grid
        .iter()
        .map(|t| {
            separation_feasible_unicast(&spec, &region, &[*t, *t, *t], &cfg())
                .unwrap()
                .feasible
        })
        .collect();
    assert!(flags.windows(2).all(|w| !w[0] || w[1]), "{flags:?}");
    assert!(!flags[0] && *flags.last().unwrap());
}

proptest! {
    #[test]
    fn max_flow_below_both_star_cuts(caps in prop::collection::vec(0.0f64..2.0, 6)) {
        let arcs = vec![
            (1, 2, caps[0]), (1, 3, caps[1]), (2, 3, caps[2]),
            (2, 4, caps[3]), (3, 4, caps[4]), (3, 2, caps[5]),
        ];
        let f = max_flow(4, &arcs, 1, 4).unwrap();
        prop_assert!(f >= -1e-12);
        prop_assert!(f <= caps[0] + caps[1] + 1e-9);
        prop_assert!(f <= caps[3] + caps[4] + 1e-9);
    }

    #[test]
    fn polytope_membership_is_downward_closed(
        caps in prop::collection::vec(0.0f64..1.0, 3),
        scale in prop::collection::vec(0.0f64..1.0, 3),
    ) {
        let region = CapacityPolytope::boxed(&caps).unwrap();
        prop_assert!(region.contains(&caps, 1e-12));
        let below: Vec<f64> = caps.iter().zip(&scale).map(|(c, s)| c * s).collect();
        prop_assert!(region.contains(&below, 1e-12));
    }
}
