use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NetworkSpec;

/// Destinations of one source sharing a distortion level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSlot {
    pub nodes: Vec<usize>,
    pub distortion: f64,
}

/// Per source (by position), its destinations grouped by distortion and sorted
/// from the largest distortion down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orders {
    pub per_source: Vec<Vec<OrderSlot>>,
}

impl Orders {
    /// `|Q_i|` counted in slots, so merged destinations count once.
    pub fn slots(&self, source: usize) -> usize {
        self.per_source[source].len()
    }

    /// Number of destination nodes reached by the link serving slot `j` (0-based)
    /// of `source`: the nodes of slots `j..`.
    pub fn reach(&self, source: usize, j: usize) -> usize {
        self.per_source[source][j..].iter().map(|s| s.nodes.len()).sum()
    }
}

/// Orders induced by the numeric distortion matrix `d` (sources by nodes,
/// node `j` at column `j - 1`) over the destination sets `dests` (1-based nodes).
///
/// Destinations with equal distortion (within 1e-12) are merged into one slot
/// before sorting. Slot node lists are ascending.
pub fn induce_orders(d: &[Vec<f64>], dests: &[Vec<usize>]) -> Result<Orders> {
    if d.len() != dests.len() {
        return Err(Error::Dimension(format!(
            "{} distortion rows for {} sources",
            d.len(),
            dests.len()
        )));
    }
    let mut per_source = Vec::with_capacity(d.len());
    for (row, q) in d.iter().zip(dests) {
        let mut nodes: Vec<usize> = q.clone();
        nodes.sort_unstable();
        nodes.dedup();
        if let Some(bad) = nodes.iter().find(|j| **j == 0 || **j > row.len()) {
            return Err(Error::Dimension(format!("destination {bad} outside the matrix")));
        }
        nodes.sort_by(|a, b| row[*b - 1].total_cmp(&row[*a - 1]).then(a.cmp(b)));
        let mut slots: Vec<OrderSlot> = Vec::new();
        for j in nodes {
            let v = row[j - 1];
            match slots.last_mut() {
                Some(s) if (s.distortion - v).abs() <= 1e-12 => s.nodes.push(j),
                _ => slots.push(OrderSlot { nodes: vec![j], distortion: v }),
            }
        }
        for s in &mut slots {
            s.nodes.sort_unstable();
        }
        per_source.push(slots);
    }
    Ok(Orders { per_source })
}

/// Orders for a network with a resolved distortion matrix.
pub fn induce_orders_for(spec: &NetworkSpec, d: &[Vec<f64>]) -> Result<Orders> {
    let dests: Vec<Vec<usize>> = spec.sources.iter().map(|s| spec.destinations(s.id)).collect();
    induce_orders(d, &dests)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorts_and_merges() {
        let d = vec![vec![0.0, 0.4, 0.1, 0.2, 0.1]];
        let o = induce_orders(&d, &[vec![2, 3, 4, 5]]).unwrap();
        let nodes: Vec<Vec<usize>> = o.per_source[0].iter().map(|s| s.nodes.clone()).collect();
        assert_eq!(nodes, vec![vec![2], vec![4], vec![3, 5]]);
        assert_eq!(o.slots(0), 3);
        assert_eq!(o.reach(0, 1), 3);
    }

    #[test]
    fn three_destinations() {
        let d = vec![vec![0.4, 0.1, 0.2]];
        let o = induce_orders(&d, &[vec![1, 2, 3]]).unwrap();
        let dist: Vec<f64> = o.per_source[0].iter().map(|s| s.distortion).collect();
        assert_eq!(dist, vec![0.4, 0.2, 0.1]);
    }
}
