use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{DistortionMeasure, Dmc, JointPmf, Pmf};

/// Problem class a network describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Correlated sources over orthogonal point-to-point links.
    Dnjscc,
    /// Independent sources, each demanded at exactly one node.
    Jscmud,
    /// Independent sources, possibly demanded at several nodes.
    Jscmmd,
}

/// An orthogonal link from node `from` to node `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub dmc: Dmc,
}

/// A multi-terminal channel `P(y_outputs | x_inputs)`.
///
/// Input and output tuples are flattened row-major in the order of `inputs` and
/// `outputs`, so the first listed node is the most significant digit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiuserChannel {
    pub inputs: Vec<usize>,
    pub input_sizes: Vec<usize>,
    pub outputs: Vec<usize>,
    pub output_sizes: Vec<usize>,
    pub dmc: Dmc,
}

/// A source: an axis of the joint source law, available at the `placement` nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub id: usize,
    pub component: usize,
    pub placement: Vec<usize>,
}

/// A communication network with sources, demands and channels.
///
/// Nodes and source ids are 1-based. `demands` maps a node to the ids of the
/// sources it reconstructs. `distortion_measures[k]` belongs to `sources[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub nodes: usize,
    pub mode: Mode,
    pub kappa: f64,
    #[serde(default)]
    pub edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<MultiuserChannel>,
    pub sources: Vec<SourceSpec>,
    pub joint_source_law: JointPmf,
    pub distortion_measures: Vec<DistortionMeasure>,
    pub demands: BTreeMap<usize, Vec<usize>>,
}

impl NetworkSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: NetworkSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.nodes == 0 {
            return bad("network has no nodes".into());
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be positive and finite, got {}", self.kappa));
        }
        let node_ok = |v: usize| (1..=self.nodes).contains(&v);
        for (k, e) in self.edges.iter().enumerate() {
            if !node_ok(e.from) || !node_ok(e.to) {
                return bad(format!("edge {k} ({} -> {}) leaves 1..{}", e.from, e.to, self.nodes));
            }
            if e.from == e.to {
                return bad(format!("edge {k} is a self-loop at node {}", e.from));
            }
        }
        if let Some(ch) = &self.channel {
            self.validate_channel(ch)?;
            if self.mode == Mode::Dnjscc {
                return bad("dnjscc networks use orthogonal edges only".into());
            }
        }
        if self.sources.is_empty() {
            return bad("network has no sources".into());
        }
        let rank = self.joint_source_law.rank();
        let mut seen_ids = Vec::new();
        let mut seen_components = Vec::new();
        for s in &self.sources {
            if seen_ids.contains(&s.id) {
                return bad(format!("source id {} appears twice", s.id));
            }
            seen_ids.push(s.id);
            if s.component >= rank || seen_components.contains(&s.component) {
                return bad(format!("source {} has invalid or repeated component {}", s.id, s.component));
            }
            seen_components.push(s.component);
            if s.placement.is_empty() || s.placement.iter().any(|v| !node_ok(*v)) {
                return bad(format!("source {} has an empty or out-of-range placement", s.id));
            }
        }
        if self.sources.len() != rank {
            return bad(format!(
                "joint source law has {rank} components but {} sources are listed",
                self.sources.len()
            ));
        }
        if self.distortion_measures.len() != self.sources.len() {
            return bad("one distortion measure per source is required".into());
        }
        for (k, s) in self.sources.iter().enumerate() {
            let size = self.joint_source_law.dims()[s.component];
            if self.distortion_measures[k].source_size() != size {
                return bad(format!(
                    "distortion measure of source {} expects {} letters, source has {size}",
                    s.id,
                    self.distortion_measures[k].source_size()
                ));
            }
        }
        for (node, wanted) in &self.demands {
            if !node_ok(*node) {
                return bad(format!("demand at node {node} outside 1..{}", self.nodes));
            }
            for id in wanted {
                if !seen_ids.contains(id) {
                    return bad(format!("node {node} demands unknown source {id}"));
                }
            }
        }
        if self.mode != Mode::Dnjscc && !self.joint_source_law.factorizes(1e-12) {
            return bad("sources must be independent in this mode".into());
        }
        if self.mode == Mode::Jscmud {
            for id in &seen_ids {
                let holders = self.destinations(*id).len();
                if holders > 1 {
                    return bad(format!("source {id} is demanded at {holders} nodes in a unicast network"));
                }
            }
        }
        Ok(())
    }

    fn validate_channel(&self, ch: &MultiuserChannel) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(format!("multiuser channel: {m}")));
        if ch.inputs.len() != ch.input_sizes.len() || ch.outputs.len() != ch.output_sizes.len() {
            return bad("node lists and alphabet sizes differ in length");
        }
        if ch.inputs.is_empty() || ch.outputs.is_empty() {
            return bad("needs at least one input and one output node");
        }
        if ch.inputs.iter().chain(&ch.outputs).any(|v| !(1..=self.nodes).contains(v)) {
            return bad("node out of range");
        }
        let nx: usize = ch.input_sizes.iter().product();
        let ny: usize = ch.output_sizes.iter().product();
        if ch.dmc.input_size() != nx || ch.dmc.output_size() != ny {
            return bad("transition matrix does not match the alphabet sizes");
        }
        Ok(())
    }

    /// Position of the source with the given id.
    pub fn source_index(&self, id: usize) -> Result<usize> {
        self.sources
            .iter()
            .position(|s| s.id == id)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown source {id}")))
    }

    /// Marginal law of the source at position `k`.
    pub fn source_law(&self, k: usize) -> Result<Pmf> {
        self.joint_source_law.marginal_axis(self.sources[k].component)
    }

    /// Nodes demanding the source with the given id, ascending.
    pub fn destinations(&self, id: usize) -> Vec<usize> {
        self.demands
            .iter()
            .filter(|(_, w)| w.contains(&id))
            .map(|(n, _)| *n)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point_to_point() -> NetworkSpec {
        NetworkSpec {
            nodes: 2,
            mode: Mode::Jscmud,
            kappa: 1.0,
            edges: vec![Edge { from: 1, to: 2, dmc: Dmc::bsc(0.1).unwrap() }],
            channel: None,
            sources: vec![SourceSpec { id: 1, component: 0, placement: vec![1] }],
            joint_source_law: JointPmf::product(&[&Pmf::uniform(2)]),
            distortion_measures: vec![DistortionMeasure::hamming(2)],
            demands: BTreeMap::from([(2, vec![1])]),
        }
    }

    #[test]
    fn valid_spec_round_trips() {
        let spec = point_to_point();
        spec.validate().unwrap();
        let back = NetworkSpec::from_json(&spec.to_json().unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn rejects_bad_edges_and_demands() {
        let mut s = point_to_point();
        s.edges[0].to = 3;
        assert!(matches!(s.validate(), Err(Error::InvalidSpec(_))));
        let mut s = point_to_point();
        s.demands.insert(1, vec![7]);
        assert!(s.validate().is_err());
        let mut s = point_to_point();
        s.demands.insert(1, vec![1]);
        assert!(s.validate().is_err(), "unicast source demanded twice");
        let mut s = point_to_point();
        s.kappa = 0.0;
        assert!(s.validate().is_err());
    }
}
