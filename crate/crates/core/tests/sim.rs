use std::path::PathBuf;

use sepnet_core::network::NetworkSpec;
use sepnet_core::prob::{DistortionMeasure, Dmc, JointPmf, Pmf, SeededRng, Typicality};
use sepnet_core::sim::{
    channel_simulation_experiment, dnjscc_separation_experiment, jscmud_superchannel_experiment,
    separation_baseline_experiment, BaseJointCode, BaselineParams, BoundCode,
};
use sepnet_core::solvers::SolverConfig;

fn fixture(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name].iter().collect();
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn network(name: &str) -> NetworkSpec {
    NetworkSpec::from_json(&fixture(name)).unwrap()
}

fn base(name: &str) -> BaseJointCode {
    serde_json::from_str(&fixture(name)).unwrap()
}

fn noiseless_fig2() -> NetworkSpec {
    let mut spec = network("fig2.json");
    for e in &mut spec.edges {
        e.dmc = Dmc::identity(2);
    }
    spec
}

#[test]
fn reports_are_reproducible() {
    let spec = network("fig2.json");
    let code = base("base_fig2.json");
    let run = |seed| dnjscc_separation_experiment(&spec, &code, 300, 0.1, 8, &SeededRng::new(seed)).unwrap();
    assert_eq!(run(5), run(5));
    assert_ne!(run(5).rows, run(6).rows);

    let ch = Dmc::bsc(0.1).unwrap();
    let law = Pmf::uniform(2);
    let cs = |seed| channel_simulation_experiment(&ch, &law, 400, 0.1, 0.05, 6, &SeededRng::new(seed)).unwrap();
    assert_eq!(cs(9), cs(9));
}

#[test]
fn noiseless_links_reproduce_exact_distortions() {
    let spec = noiseless_fig2();
    let code = base("base_fig2.json");
    let r = dnjscc_separation_experiment(&spec, &code, 400, 0.1, 10, &SeededRng::new(1)).unwrap();
    r.check().unwrap();
    assert_eq!(r.e2, 0);
    // an atypical source block is the only way a pair can leave the joint typical set
    assert!(r.rows.iter().all(|t| t.e1 || t.e3.iter().all(|e| !e)));
    assert_eq!(r.rate_violations, 0);
    assert!(r.distortions.iter().all(|rec| rec.reference == 0.0));
    for row in r.rows.iter().filter(|t| !t.e1) {
        assert!(!row.failed);
        assert!(row.distortions.iter().all(|v| *v == 0.0), "trial {}", row.trial);
    }
}

#[test]
fn base_code_exact_distortion_matches_majority_vote() {
    let spec = network("p2p_rep3.json");
    let code = base("base_majority.json");
    let exact = BoundCode::new(&spec, &code).unwrap().analyze().unwrap();
    let d = exact.distortions.values().next().copied().unwrap();
    // P(at least two of three flips) for BSC(0.1)
    assert!((d - (3.0 * 0.01 * 0.9 + 0.001)).abs() < 1e-12, "{d}");
}

#[test]
fn report_counts_are_consistent() {
    let spec = network("fig2.json");
    let code = base("base_fig2.json");
    let r = dnjscc_separation_experiment(&spec, &code, 250, 0.1, 12, &SeededRng::new(3)).unwrap();
    r.check().unwrap();
    assert_eq!(r.rows.len(), r.trials);
    assert_eq!(r.failures, r.rows.iter().filter(|t| t.failed).count());
    assert!((r.failure_rate - r.failures as f64 / r.trials as f64).abs() < 1e-15);
    assert!(r.session_rates.iter().all(|s| !s.violated));
    assert_eq!(r.to_csv().lines().count(), r.trials + 1);
}

#[test]
fn dnjscc_error_does_not_grow_with_block_length() {
    let spec = network("fig2.json");
    let code = base("base_fig2.json");
    let ladder = [250, 1000, 4000];
    let mut agree = 0;
    for seed in 0..20u64 {
        let rates: Vec<f64> = ladder
            .iter()
            .map(|n| {
                dnjscc_separation_experiment(&spec, &code, *n, 0.1, 10, &SeededRng::new(seed))
                    .unwrap()
                    .failure_rate
            })
            .collect();
        if rates.windows(2).all(|w| w[1] <= w[0]) {
            agree += 1;
        }
    }
    assert!(agree > 10, "{agree} of 20 seeds");
}

#[test]
fn noiseless_channel_simulation_succeeds() {
    let ch = Dmc::identity(2);
    let law = Pmf::bernoulli(0.3).unwrap();
    let r = channel_simulation_experiment(&ch, &law, 500, 0.1, 0.05, 10, &SeededRng::new(2)).unwrap();
    r.check().unwrap();
    assert_eq!(r.failures, 0);
    assert!(r.tv_mean < 0.05, "{}", r.tv_mean);
}

#[test]
fn single_codeword_superchannel_is_flagged() {
    let spec = network("p2p_bsc005.json");
    let code = base("base_identity.json");
    let cfg = SolverConfig::default();
    let r = jscmud_superchannel_experiment(&spec, &code, &[0.5], 0.0, 0.05, 200, 6, &SeededRng::new(4), &cfg)
        .unwrap();
    assert!(r.degenerate);
    assert!(!r.notes.is_empty());
    for row in &r.rows { eprintln!("{} {} {:?} {} {:?}", row.e1, row.e2, row.e3, row.failed, row.distortions); }
    assert!(r.e3.iter().all(|c| *c == 0));
}

#[test]
fn baseline_distortion_tracks_its_target() {
    let src = Pmf::uniform(2);
    let d = DistortionMeasure::hamming(2);
    let cfg = SolverConfig::default();
    let params = BaselineParams {
        target_distortion: 0.2,
        rate_margin: 0.03,
        source_typicality: Typicality::Robust(0.05),
        channel_typicality: Typicality::Absolute(0.03),
    };
    let ch = Dmc::bsc(0.11).unwrap();
    let r = separation_baseline_experiment(&src, &d, &ch, 1.0, 1000, &params, 6, &SeededRng::new(0), &cfg).unwrap();
    r.check().unwrap();
    for row in r.rows.iter().filter(|t| !t.failed) {
        assert!(row.distortions[0] <= 0.23, "{}", row.distortions[0]);
        assert!(row.distortions[0] >= 0.11 - 0.02);
    }
}

#[test]
fn joint_law_of_identity_code_is_diagonal() {
    let spec = noiseless_fig2();
    let code = base("base_fig2.json");
    let exact = BoundCode::new(&spec, &code).unwrap().analyze().unwrap();
    for joint in exact.recon_joints.values() {
        let j: &JointPmf = joint;
        let n = j.dims()[0];
        for a in 0..n {
            for b in 0..j.dims()[1] {
                if a != b {
                    assert_eq!(j.prob(&[a, b]), 0.0);
                }
            }
        }
    }
}
