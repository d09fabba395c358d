use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::spec::NetworkSpec;
use crate::error::{Error, Result};

/// One entry of a distortion matrix; `Max` stands for the rate-zero distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistortionEntry {
    Value(f64),
    Max,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawEntry {
    Value(f64),
    Tag(String),
}

impl Serialize for DistortionEntry {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DistortionEntry::Value(v) => RawEntry::Value(*v).serialize(s),
            DistortionEntry::Max => RawEntry::Tag("max".into()).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for DistortionEntry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match RawEntry::deserialize(d)? {
            RawEntry::Value(v) => Ok(DistortionEntry::Value(v)),
            RawEntry::Tag(t) if t == "max" => Ok(DistortionEntry::Max),
            RawEntry::Tag(t) => Err(serde::de::Error::custom(format!(
                "distortion entry must be a number or \"max\", got \"{t}\""
            ))),
        }
    }
}

/// Target distortions `D[k][j]` of source `k` (by position) at node `j` (1-based,
/// stored at column `j - 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DistortionMatrix {
    pub entries: Vec<Vec<DistortionEntry>>,
}

impl DistortionMatrix {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Numeric matrix for `spec`: `Max` becomes `d_max` of the source, and the
    /// shape and conventions are checked. Entries for undemanded pairs must be
    /// `Max` or equal `d_max`; demanded pairs at a node holding the source must be 0.
    pub fn resolve(&self, spec: &NetworkSpec) -> Result<Vec<Vec<f64>>> {
        let m = spec.sources.len();
        if self.entries.len() != m || self.entries.iter().any(|r| r.len() != spec.nodes) {
            return Err(Error::Dimension(format!(
                "distortion matrix must be {m} x {} (sources x nodes)",
                spec.nodes
            )));
        }
        let mut out = vec![vec![0.0; spec.nodes]; m];
        for (k, src) in spec.sources.iter().enumerate() {
            let d_max = spec.distortion_measures[k].d_max(&spec.source_law(k)?)?;
            let dests = spec.destinations(src.id);
            for j in 1..=spec.nodes {
                let v = match self.entries[k][j - 1] {
                    DistortionEntry::Max => d_max,
                    DistortionEntry::Value(v) => {
                        if !(v >= 0.0 && v.is_finite()) {
                            return Err(Error::InvalidArgument(format!(
                                "distortion of source {} at node {j} is {v}",
                                src.id
                            )));
                        }
                        v
                    }
                };
                if !dests.contains(&j) && (v - d_max).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "node {j} does not demand source {}; its entry must be \"max\"",
                        src.id
                    )));
                }
                if dests.contains(&j) && src.placement.contains(&j) && v != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "source {} resides at node {j}; its entry must be 0",
                        src.id
                    )));
                }
                out[k][j - 1] = v;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentinel_json() {
        let m = DistortionMatrix::from_json(r#"[[0.1, "max"], [0, 0.25]]"#).unwrap();
        assert_eq!(m.entries[0][1], DistortionEntry::Max);
        assert_eq!(m.entries[1][0], DistortionEntry::Value(0.0));
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, r#"[[0.1,"max"],[0.0,0.25]]"#);
        assert!(DistortionMatrix::from_json(r#"[["min"]]"#).is_err());
    }
}
