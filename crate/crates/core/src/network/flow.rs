use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Maximum `source -> sink` flow with capacitated directed arcs `(from, to, cap)`
/// over nodes `1..=nodes`. Parallel arcs add up. Edmonds-Karp on a dense residual
/// matrix, which suits the small networks handled here.
pub fn max_flow(nodes: usize, arcs: &[(usize, usize, f64)], source: usize, sink: usize) -> Result<f64> {
    let in_range = |v: usize| (1..=nodes).contains(&v);
    if !in_range(source) || !in_range(sink) {
        return Err(Error::InvalidArgument(format!(
            "flow endpoints {source} -> {sink} outside 1..{nodes}"
        )));
    }
    if source == sink {
        return Err(Error::InvalidArgument("flow source and sink coincide".into()));
    }
    let mut residual = vec![vec![0.0f64; nodes]; nodes];
    for &(a, b, c) in arcs {
        if !in_range(a) || !in_range(b) {
            return Err(Error::InvalidArgument(format!("arc {a} -> {b} outside 1..{nodes}")));
        }
        if !(c >= 0.0) {
            return Err(Error::InvalidArgument(format!("arc {a} -> {b} has capacity {c}")));
        }
        residual[a - 1][b - 1] += c;
    }
    let (s, t) = (source - 1, sink - 1);
    let eps = 1e-15;
    let mut total = 0.0;
    loop {
        let mut parent = vec![usize::MAX; nodes];
        parent[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..nodes {
                if parent[v] == usize::MAX && residual[u][v] > eps {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[t] == usize::MAX {
            return Ok(total);
        }
        let mut push = f64::INFINITY;
        let mut v = t;
        while v != s {
            let u = parent[v];
            push = push.min(residual[u][v]);
            v = u;
        }
        let mut v = t;
        while v != s {
            let u = parent[v];
            residual[u][v] -= push;
            residual[v][u] += push;
            v = u;
        }
        total += push;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_network() {
        // CLRS flow network, max flow 23
        let arcs = [
            (1, 2, 16.0),
            (1, 3, 13.0),
            (3, 2, 4.0),
            (2, 4, 12.0),
            (4, 3, 9.0),
            (3, 5, 14.0),
            (5, 4, 7.0),
            (4, 6, 20.0),
            (5, 6, 4.0),
        ];
        assert_eq!(max_flow(6, &arcs, 1, 6).unwrap(), 23.0);
    }

    #[test]
    fn disconnected_is_zero() {
        assert_eq!(max_flow(3, &[(1, 2, 1.0)], 1, 3).unwrap(), 0.0);
    }
}
