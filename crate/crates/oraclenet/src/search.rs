//! Uniform lattice discretization of the c-space and A* shortest-path search.
//! Paths found here act as the expert demonstrations the network is trained
//! to imitate.

use crate::env::{euclidean, Config, EnvError, Environment};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Refuse to materialize lattices larger than this many candidate nodes.
pub const DEFAULT_NODE_CAP: usize = 10_000_000;

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("nodes_per_axis must be >= 2, got {0}")]
    KTooSmall(usize),
    #[error("lattice of {total} nodes exceeds the cap of {cap}")]
    TooManyNodes { total: usize, cap: usize },
    #[error("no free lattice node: the grid cannot represent this environment")]
    EmptyFreeSet,
    #[error("node {0:?} is not a free node of this grid")]
    NodeNotFree(NodeId),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Flat lattice index; axis 0 is the most significant digit, so ordering on
/// `NodeId` equals lexicographic ordering on the per-axis tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

/// A node path through the lattice with its accumulated Euclidean cost.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub nodes: Vec<NodeId>,
    pub cost: f64,
}

/// Immutable lattice over an environment: `k` nodes per axis, a freeness mask
/// per lattice point, and collision-validated (3^d − 1)-connectivity stored
/// as adjacency ranges.
#[derive(Debug, Clone)]
pub struct GridGraph {
    env: Environment,
    k: usize,
    dim: usize,
    strides: Vec<usize>,
    spacing: Vec<f64>,
    free: Vec<bool>,
    free_list: Vec<NodeId>,
    adj_offsets: Vec<u32>,
    adj_targets: Vec<NodeId>,
}

impl GridGraph {
    pub fn build(env: &Environment, nodes_per_axis: usize) -> Result<Self, SearchError> {
        Self::build_capped(env, nodes_per_axis, DEFAULT_NODE_CAP)
    }

    pub fn build_capped(
        env: &Environment,
        nodes_per_axis: usize,
        node_cap: usize,
    ) -> Result<Self, SearchError> {
        let k = nodes_per_axis;
        if k < 2 {
            return Err(SearchError::KTooSmall(k));
        }
        let dim = env.dim();
        let mut total: usize = 1;
        for _ in 0..dim {
            total = total
                .checked_mul(k)
                .filter(|&t| t <= node_cap)
                .ok_or(SearchError::TooManyNodes {
                    total: usize::MAX,
                    cap: node_cap,
                })?;
        }
        if total > node_cap {
            return Err(SearchError::TooManyNodes {
                total,
                cap: node_cap,
            });
        }

        let mut strides = vec![1usize; dim];
        for i in (0..dim.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * k;
        }
        let spacing: Vec<f64> = env
            .bounds()
            .iter()
            .map(|b| (b[1] - b[0]) / (k - 1) as f64)
            .collect();

        let mut free = vec![false; total];
        let mut free_list = Vec::new();
        let mut coords = vec![0.0f64; dim];
        for idx in 0..total {
            decode_into(idx, &strides, k, env.bounds(), &spacing, &mut coords);
            if env.is_free_raw(&coords) {
                free[idx] = true;
                free_list.push(NodeId(idx as u32));
            }
        }
        if free_list.is_empty() {
            return Err(SearchError::EmptyFreeSet);
        }

        // deltas in {-1,0,1}^d minus the origin, lexicographic; with positive
        // strides this enumerates each node's neighbors in ascending NodeId
        // order
        let deltas = delta_tuples(dim);
        let edge_res = spacing.iter().cloned().fold(f64::INFINITY, f64::min) / 2.0;

        let mut adj_offsets = Vec::with_capacity(total + 1);
        let mut adj_targets = Vec::new();
        adj_offsets.push(0u32);
        let mut a = vec![0.0f64; dim];
        let mut b = vec![0.0f64; dim];
        for idx in 0..total {
            if free[idx] {
                decode_into(idx, &strides, k, env.bounds(), &spacing, &mut a);
                let tuple = decode_tuple(idx, &strides, k);
                'delta: for d in &deltas {
                    let mut nidx = idx as i64;
                    for (axis, &step) in d.iter().enumerate() {
                        let c = tuple[axis] as i64 + step;
                        if c < 0 || c >= k as i64 {
                            continue 'delta;
                        }
                        nidx += step * strides[axis] as i64;
                    }
                    let nidx = nidx as usize;
                    if !free[nidx] {
                        continue;
                    }
                    decode_into(nidx, &strides, k, env.bounds(), &spacing, &mut b);
                    if env.segment_free_raw(&a, &b, edge_res) {
                        adj_targets.push(NodeId(nidx as u32));
                    }
                }
            }
            adj_offsets.push(adj_targets.len() as u32);
        }

        Ok(GridGraph {
            env: env.clone(),
            k,
            dim,
            strides,
            spacing,
            free,
            free_list,
            adj_offsets,
            adj_targets,
        })
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Free lattice nodes in ascending (lexicographic) order.
    pub fn free_nodes(&self) -> &[NodeId] {
        &self.free_list
    }

    pub fn is_free_node(&self, n: NodeId) -> bool {
        (n.0 as usize) < self.free.len() && self.free[n.0 as usize]
    }

    pub fn node_tuple(&self, n: NodeId) -> Vec<usize> {
        decode_tuple(n.0 as usize, &self.strides, self.k)
    }

    pub fn node_from_tuple(&self, tuple: &[usize]) -> NodeId {
        debug_assert_eq!(tuple.len(), self.dim);
        let idx: usize = tuple
            .iter()
            .zip(&self.strides)
            .map(|(&c, &s)| c * s)
            .sum();
        NodeId(idx as u32)
    }

    pub fn node_config(&self, n: NodeId) -> Config {
        let mut coords = vec![0.0; self.dim];
        self.node_coords_into(n, &mut coords);
        Config::new(coords).expect("lattice coords are finite")
    }

    fn node_coords_into(&self, n: NodeId, out: &mut [f64]) {
        decode_into(
            n.0 as usize,
            &self.strides,
            self.k,
            self.env.bounds(),
            &self.spacing,
            out,
        );
    }

    /// Collision-validated lattice neighbors of a free node, ascending.
    pub fn neighbors(&self, n: NodeId) -> &[NodeId] {
        let i = n.0 as usize;
        let lo = self.adj_offsets[i] as usize;
        let hi = self.adj_offsets[i + 1] as usize;
        &self.adj_targets[lo..hi]
    }

    /// Free node closest to `q` in Euclidean distance; ties break toward the
    /// lexicographically smallest lattice tuple.
    pub fn nearest_node(&self, q: &Config) -> NodeId {
        assert_eq!(q.len(), self.dim, "config dimension mismatch");
        let mut best = self.free_list[0];
        let mut best_d = f64::INFINITY;
        let mut coords = vec![0.0; self.dim];
        for &n in &self.free_list {
            self.node_coords_into(n, &mut coords);
            let d: f64 = coords
                .iter()
                .zip(q.coords())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d < best_d {
                best_d = d;
                best = n;
            }
        }
        best
    }

    /// A* with the Euclidean-distance heuristic (admissible and consistent
    /// for Euclidean edge costs). Returns `None` when the goal is
    /// unreachable. Ties in the queue break on smaller g, then smaller node
    /// id, making expansion order deterministic.
    pub fn astar(&self, start: NodeId, goal: NodeId) -> Result<Option<GridPath>, SearchError> {
        if !self.is_free_node(start) {
            return Err(SearchError::NodeNotFree(start));
        }
        if !self.is_free_node(goal) {
            return Err(SearchError::NodeNotFree(goal));
        }
        if start == goal {
            return Ok(Some(GridPath {
                nodes: vec![start],
                cost: 0.0,
            }));
        }

        let total = self.free.len();
        let mut g_best = vec![f64::INFINITY; total];
        let mut parent = vec![u32::MAX; total];
        let mut closed = vec![false; total];
        let mut goal_coords = vec![0.0; self.dim];
        self.node_coords_into(goal, &mut goal_coords);

        let mut cur = vec![0.0; self.dim];
        let mut nb = vec![0.0; self.dim];

        let mut open = BinaryHeap::new();
        g_best[start.0 as usize] = 0.0;
        self.node_coords_into(start, &mut cur);
        open.push(HeapEntry {
            f: euclidean(&cur, &goal_coords),
            g: 0.0,
            node: start,
        });

        while let Some(entry) = open.pop() {
            let u = entry.node;
            let ui = u.0 as usize;
            if closed[ui] || entry.g > g_best[ui] {
                continue;
            }
            closed[ui] = true;
            if u == goal {
                let mut nodes = vec![u];
                let mut p = parent[ui];
                while p != u32::MAX {
                    nodes.push(NodeId(p));
                    p = parent[p as usize];
                }
                nodes.reverse();
                return Ok(Some(GridPath {
                    nodes,
                    cost: entry.g,
                }));
            }
            self.node_coords_into(u, &mut cur);
            for &v in self.neighbors(u) {
                let vi = v.0 as usize;
                if closed[vi] {
                    continue;
                }
                self.node_coords_into(v, &mut nb);
                let tentative = entry.g + euclidean(&cur, &nb);
                if tentative < g_best[vi] {
                    g_best[vi] = tentative;
                    parent[vi] = u.0;
                    open.push(HeapEntry {
                        f: tentative + euclidean(&nb, &goal_coords),
                        g: tentative,
                        node: v,
                    });
                }
            }
        }
        Ok(None)
    }

    /// Configs along a node path.
    pub fn path_configs(&self, path: &GridPath) -> Vec<Config> {
        path.nodes.iter().map(|&n| self.node_config(n)).collect()
    }
}

fn decode_tuple(idx: usize, strides: &[usize], k: usize) -> Vec<usize> {
    strides.iter().map(|&s| (idx / s) % k).collect()
}

fn decode_into(
    idx: usize,
    strides: &[usize],
    k: usize,
    bounds: &[[f64; 2]],
    spacing: &[f64],
    out: &mut [f64],
) {
    for (axis, o) in out.iter_mut().enumerate() {
        let c = (idx / strides[axis]) % k;
        *o = bounds[axis][0] + c as f64 * spacing[axis];
    }
}

fn delta_tuples(dim: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut d = vec![-1i64; dim];
    loop {
        if d.iter().any(|&x| x != 0) {
            out.push(d.clone());
        }
        let mut axis = dim;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if d[axis] < 1 {
                d[axis] += 1;
                break;
            }
            d[axis] = -1;
        }
    }
}

/// Min-heap entry ordered by (f, g, node) ascending.
struct HeapEntry {
    f: f64,
    g: f64,
    node: NodeId,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed so BinaryHeap pops the smallest (f, g, node)
        other
            .f
            .total_cmp(&self.f)
            .then(other.g.total_cmp(&self.g))
            .then(other.node.0.cmp(&self.node.0))
    }
}
