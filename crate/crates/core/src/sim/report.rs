use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Empirical and exact distortion of one source at one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionRecord {
    pub source: usize,
    pub node: usize,
    pub empirical: f64,
    /// Reference value: the base code's exact distortion, or the target.
    pub reference: f64,
}

/// Codebook rate of one link in one session against the link capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRate {
    pub link: usize,
    pub session: usize,
    pub information: f64,
    pub rate: f64,
    pub capacity: f64,
    /// `information > capacity` beyond solver tolerance.
    pub violated: bool,
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub e1: bool,
    pub e2: bool,
    /// One flag per class-three event (per source for unicast, one otherwise).
    pub e3: Vec<bool>,
    pub failed: bool,
    pub tv: f64,
    pub distortions: Vec<f64>,
}

/// Aggregated results of a seeded experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub experiment: String,
    pub seed: u64,
    pub trials: usize,
    pub n_prime: usize,
    pub delta: f64,
    pub rates: Vec<f64>,
    pub e1: usize,
    pub e2: usize,
    pub e3: Vec<usize>,
    pub failures: usize,
    pub failure_rate: f64,
    pub tv_mean: f64,
    pub distortions: Vec<DistortionRecord>,
    pub session_rates: Vec<SessionRate>,
    pub rate_violations: usize,
    /// Set when a codebook degenerates to a single codeword.
    pub degenerate: bool,
    pub notes: Vec<String>,
    pub rows: Vec<TrialRow>,
}

impl SimReport {
    pub(crate) fn assemble(
        experiment: &str,
        seed: u64,
        n_prime: usize,
        delta: f64,
        rates: Vec<f64>,
        references: Vec<(usize, usize, f64)>,
        rows: Vec<TrialRow>,
    ) -> Self {
        let trials = rows.len();
        let n3 = rows.first().map_or(0, |r| r.e3.len());
        let mut e3 = vec![0; n3];
        for r in &rows {
            for (c, f) in e3.iter_mut().zip(&r.e3) {
                *c += usize::from(*f);
            }
        }
        let mean = |f: &dyn Fn(&TrialRow) -> f64| {
            if trials == 0 {
                0.0
            } else {
                rows.iter().map(f).sum::<f64>() / trials as f64
            }
        };
        let failures = rows.iter().filter(|r| r.failed).count();
        let distortions = references
            .iter()
            .enumerate()
            .map(|(i, (source, node, reference))| DistortionRecord {
                source: *source,
                node: *node,
                empirical: mean(&|r: &TrialRow| r.distortions[i]),
                reference: *reference,
            })
            .collect();
        Self {
            experiment: experiment.into(),
            seed,
            trials,
            n_prime,
            delta,
            rates,
            e1: rows.iter().filter(|r| r.e1).count(),
            e2: rows.iter().filter(|r| r.e2).count(),
            e3,
            failures,
            failure_rate: if trials == 0 { 0.0 } else { failures as f64 / trials as f64 },
            tv_mean: mean(&|r: &TrialRow| r.tv),
            distortions,
            session_rates: Vec::new(),
            rate_violations: 0,
            degenerate: false,
            notes: Vec::new(),
            rows,
        }
    }

    /// Checks the report invariants: counts within trials, distortions
    /// nonnegative, distances in `[0, 1]`.
    pub fn check(&self) -> Result<()> {
        let within = |c: usize| c <= self.trials;
        if !within(self.e1) || !within(self.e2) || !within(self.failures) || !self.e3.iter().all(|c| within(*c)) {
            return Err(Error::InvalidArgument("event count exceeds trial count".into()));
        }
        if self.distortions.iter().any(|d| !(d.empirical >= 0.0)) {
            return Err(Error::InvalidArgument("negative empirical distortion".into()));
        }
        if self.rows.iter().any(|r| !(0.0..=1.0).contains(&r.tv)) {
            return Err(Error::InvalidArgument("type distance outside [0, 1]".into()));
        }
        Ok(())
    }

    /// One line per trial: `trial,e1,e2,e3_1..,failed,tv,distortion_1..`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,e1,e2");
        for i in 0..self.e3.len() {
            let _ = write!(out, ",e3_{}", i + 1);
        }
        out.push_str(",failed,tv");
        for d in &self.distortions {
            let _ = write!(out, ",d_{}_{}", d.source, d.node);
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},{},{}", r.trial, u8::from(r.e1), u8::from(r.e2));
            for f in &r.e3 {
                let _ = write!(out, ",{}", u8::from(*f));
            }
            let _ = write!(out, ",{},{}", u8::from(r.failed), r.tv);
            for d in &r.distortions {
                let _ = write!(out, ",{d}");
            }
            out.push('\n');
        }
        out
    }
}
