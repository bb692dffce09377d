//! Helpers shared by the integration tests.

use std::collections::BinaryHeap;

use oraclenet::env::euclidean;
use oraclenet::search::{GridGraph, NodeId};

#[derive(PartialEq)]
struct Entry(f64, NodeId);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.0.total_cmp(&self.0)
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Textbook Dijkstra over the grid adjacency; the optimal-cost oracle the
/// heuristic search is measured against.
#[allow(dead_code)]
pub fn dijkstra(g: &GridGraph, start: NodeId, goal: NodeId) -> Option<f64> {
    let total = g.nodes_per_axis().pow(g.dim() as u32);
    let mut dist = vec![f64::INFINITY; total];
    let mut heap = BinaryHeap::new();
    dist[start.0 as usize] = 0.0;
    heap.push(Entry(0.0, start));
    while let Some(Entry(d, n)) = heap.pop() {
        if d > dist[n.0 as usize] {
            continue;
        }
        if n == goal {
            return Some(d);
        }
        let nc = g.node_config(n);
        for &m in g.neighbors(n) {
            let nd = d + euclidean(&nc, &g.node_config(m));
            if nd < dist[m.0 as usize] {
                dist[m.0 as usize] = nd;
                heap.push(Entry(nd, m));
            }
        }
    }
    None
}
