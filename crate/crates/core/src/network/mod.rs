//! Network problem descriptions and separation-side feasibility computations.

mod flow;
mod matrix;
mod polytope;
mod spec;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use flow::max_flow;
pub use matrix::{DistortionEntry, DistortionMatrix};
pub use polytope::CapacityPolytope;
pub use spec::{Edge, Mode, MultiuserChannel, NetworkSpec, SourceSpec};

use crate::error::{Error, Result};
use crate::prob::{DistortionMeasure, Dmc, Pmf};
use crate::solvers::{channel_capacity, distortion_rate, rate_distortion, SolverConfig, SolverResult};

/// Capacity of one orthogonal edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCapacity {
    pub from: usize,
    pub to: usize,
    pub capacity: SolverResult,
}

/// Per-edge capacities in edge order.
pub fn edge_capacities(spec: &NetworkSpec, cfg: &SolverConfig) -> Result<Vec<EdgeCapacity>> {
    require_mode(spec, Mode::Dnjscc, "edge capacities")?;
    spec.edges
        .par_iter()
        .map(|e| {
            let capacity = channel_capacity(&e.dmc, cfg)
                .map_err(|err| err.in_context(format!("edge {} -> {}", e.from, e.to)))?;
            Ok(EdgeCapacity { from: e.from, to: e.to, capacity })
        })
        .collect()
}

/// Max-flow value between two nodes with edge capacities as arc weights.
pub fn min_cut_bound(spec: &NetworkSpec, source: usize, sink: usize, cfg: &SolverConfig) -> Result<f64> {
    let caps = edge_capacities(spec, cfg)?;
    let arcs: Vec<(usize, usize, f64)> = caps.iter().map(|c| (c.from, c.to, c.capacity.value)).collect();
    max_flow(spec.nodes, &arcs, source, sink)
}

/// Outcome of a separation feasibility test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// Per-source rates `R_i(D_i) / kappa` in bits per channel use.
    pub required: Vec<f64>,
    /// The lexicographically smallest vertex meeting the requirement, when feasible.
    pub witness: Option<Vec<f64>>,
}

/// Whether `region` contains a rate vector with `R_i >= R_i(D_i) / kappa` for every
/// source (by position) of a unicast network.
///
/// With nonnegative coefficients the requirement vector itself is the smallest
/// candidate in every coordinate, so the test reduces to its membership, and it
/// is the lexicographically smallest satisfying vertex.
pub fn separation_feasible_unicast(
    spec: &NetworkSpec,
    region: &CapacityPolytope,
    distortions: &[f64],
    cfg: &SolverConfig,
) -> Result<Feasibility> {
    require_mode(spec, Mode::Jscmud, "unicast separation feasibility")?;
    if region.is_empty() {
        return Err(Error::Infeasible("capacity polytope is empty".into()));
    }
    let m = spec.sources.len();
    if distortions.len() != m || region.dim() != m {
        return Err(Error::Dimension(format!(
            "{m} sources, {} distortions, polytope of dimension {}",
            distortions.len(),
            region.dim()
        )));
    }
    if let Some(v) = distortions.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidArgument(format!("distortion {v} must be nonnegative")));
    }
    let required = (0..m)
        .into_par_iter()
        .map(|k| {
            let src = spec.source_law(k)?;
            let r = rate_distortion(&src, &spec.distortion_measures[k], distortions[k], cfg)
                .map_err(|e| e.in_context(format!("source {}", spec.sources[k].id)))?;
            Ok(r.value.max(0.0) / spec.kappa)
        })
        .collect::<Result<Vec<f64>>>()?;
    let feasible = region.contains(&required, cfg.tolerance);
    Ok(Feasibility {
        feasible,
        witness: feasible.then(|| required.clone()),
        required,
    })
}

/// One row of the point-to-point separation frontier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub kappa: f64,
    pub capacity: f64,
    pub distortion: f64,
}

/// Smallest distortion reachable by separation over `kappa` channel uses per
/// sample: `D(kappa C)`.
pub fn separation_frontier_point_to_point(
    src: &Pmf,
    d: &DistortionMeasure,
    ch: &Dmc,
    kappa: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    let c = channel_capacity(ch, cfg)?;
    frontier_at(src, d, c.value, kappa, cfg)
}

/// The frontier tabulated over `kappas`, computing the capacity once.
pub fn frontier_table(
    src: &Pmf,
    d: &DistortionMeasure,
    ch: &Dmc,
    kappas: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<FrontierPoint>> {
    if kappas.is_empty() {
        return Err(Error::InvalidArgument("kappa grid is empty".into()));
    }
    let c = channel_capacity(ch, cfg)?.value;
    kappas
        .iter()
        .map(|&kappa| {
            Ok(FrontierPoint {
                kappa,
                capacity: c,
                distortion: frontier_at(src, d, c, kappa, cfg)?,
            })
        })
        .collect()
}

fn frontier_at(src: &Pmf, d: &DistortionMeasure, capacity: f64, kappa: f64, cfg: &SolverConfig) -> Result<f64> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!("kappa {kappa} must be nonnegative")));
    }
    if kappa == 0.0 {
        return d.d_max(src);
    }
    Ok(distortion_rate(src, d, kappa * capacity, cfg)?.value)
}

fn require_mode(spec: &NetworkSpec, mode: Mode, what: &str) -> Result<()> {
    if spec.mode != mode {
        return Err(Error::InvalidSpec(format!(
            "{what} needs a {mode:?} network, got {:?}",
            spec.mode
        )));
    }
    Ok(())
}
