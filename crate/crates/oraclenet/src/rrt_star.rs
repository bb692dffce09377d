//! RRT* baseline: uniform sampling with goal bias, steer-limited extension,
//! minimum-cost parent choice and local rewiring inside a shrinking radius.
//! Runs a fixed iteration budget and reports the best goal-connected path.

use crate::env::{euclidean, Config, Environment};
use crate::rollout::{RolloutError, RolloutResult, RolloutStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct RrtStarOptions {
    pub max_iterations: usize,
    /// Steer distance per extension.
    pub step_size: f64,
    /// Scale for the shrinking near-set radius gamma*(log n / n)^(1/d),
    /// capped at step_size.
    pub neighbor_radius_gamma: f64,
    pub goal_bias: f64,
    pub goal_threshold: f64,
    pub check_resolution: f64,
    pub seed: u64,
}

/// Volume of the d-dimensional unit ball.
fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

impl RrtStarOptions {
    /// Defaults tied to the same lattice scale as the rollout options:
    /// step = 2x min grid spacing, goal_threshold = spacing, resolution =
    /// spacing/2. Gamma follows the standard shrinking-radius rule with the
    /// free-space volume estimated by rejection sampling.
    pub fn for_env(env: &Environment, nodes_per_axis: usize, seed: u64) -> Self {
        let k = nodes_per_axis.max(2);
        let spacing = env
            .bounds()
            .iter()
            .map(|b| (b[1] - b[0]) / (k - 1) as f64)
            .fold(f64::INFINITY, f64::min);
        let d = env.dim();
        let total_volume: f64 = env.bounds().iter().map(|b| b[1] - b[0]).product();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_F2EE);
        let trials = 1000;
        let mut free = 0usize;
        for _ in 0..trials {
            let q: Vec<f64> = env
                .bounds()
                .iter()
                .map(|b| rng.random_range(b[0]..=b[1]))
                .collect();
            if env.is_free_raw(&q) {
                free += 1;
            }
        }
        let mu_free = (free.max(1) as f64 / trials as f64) * total_volume;
        let df = d as f64;
        let gamma =
            (2.0 * (1.0 + 1.0 / df)).powf(1.0 / df) * (mu_free / unit_ball_volume(d)).powf(1.0 / df);
        RrtStarOptions {
            max_iterations: 5000,
            step_size: 2.0 * spacing,
            neighbor_radius_gamma: gamma,
            goal_bias: 0.05,
            goal_threshold: spacing,
            check_resolution: spacing / 2.0,
            seed,
        }
    }
}

struct Tree {
    nodes: Vec<Vec<f64>>,
    parent: Vec<usize>,
    cost: Vec<f64>,
    children: Vec<Vec<usize>>,
}

impl Tree {
    fn new(root: Vec<f64>) -> Self {
        Tree {
            nodes: vec![root],
            parent: vec![usize::MAX],
            cost: vec![0.0],
            children: vec![Vec::new()],
        }
    }

    fn push(&mut self, q: Vec<f64>, parent: usize, cost: f64) -> usize {
        let idx = self.nodes.len();
        self.nodes.push(q);
        self.parent.push(parent);
        self.cost.push(cost);
        self.children.push(Vec::new());
        self.children[parent].push(idx);
        idx
    }

    fn reparent(&mut self, node: usize, new_parent: usize, new_cost: f64) {
        let old = self.parent[node];
        self.children[old].retain(|&c| c != node);
        self.parent[node] = new_parent;
        self.children[new_parent].push(node);
        let delta = new_cost - self.cost[node];
        let mut stack = vec![node];
        while let Some(u) = stack.pop() {
            self.cost[u] += delta;
            stack.extend_from_slice(&self.children[u]);
        }
        debug_assert!(self.invariant_holds());
    }

    /// Every non-root node has one parent and cost equal to the parent's
    /// cost plus the edge length.
    fn invariant_holds(&self) -> bool {
        for i in 1..self.nodes.len() {
            let p = self.parent[i];
            if p == usize::MAX || !self.children[p].contains(&i) {
                return false;
            }
            let expect = self.cost[p] + euclidean(&self.nodes[p], &self.nodes[i]);
            if (self.cost[i] - expect).abs() > 1e-9 {
                return false;
            }
        }
        true
    }
}

/// RRT* with a per-iteration observer receiving (iteration, best cost so
/// far including the goal link). Deterministic for a fixed seed.
pub fn rrt_star_observed(
    env: &Environment,
    start: &Config,
    goal: &Config,
    opts: &RrtStarOptions,
    mut observer: impl FnMut(usize, Option<f64>),
) -> Result<RolloutResult, RolloutError> {
    let d = env.dim();
    if start.len() != d || goal.len() != d {
        return Err(RolloutError::DimMismatch {
            got: if start.len() != d {
                start.len()
            } else {
                goal.len()
            },
            want: d,
        });
    }
    if !env.is_free(start)? {
        return Err(RolloutError::InfeasibleStart);
    }
    if !env.is_free(goal)? {
        return Err(RolloutError::InfeasibleGoal);
    }

    let t0 = Instant::now();
    let res = opts.check_resolution / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut tree = Tree::new(start.coords().to_vec());
    // nodes verified to connect to the goal, with their goal-link lengths
    let mut connected: Vec<(usize, f64)> = Vec::new();
    let mut first_solution: Option<f64> = None;

    let goal_link = |tree: &Tree, i: usize| -> Option<f64> {
        let dist = euclidean(&tree.nodes[i], goal.coords());
        if dist <= opts.goal_threshold
            && env.segment_free_raw(&tree.nodes[i], goal.coords(), res)
        {
            Some(dist)
        } else {
            None
        }
    };
    if let Some(link) = goal_link(&tree, 0) {
        connected.push((0, link));
        first_solution = Some(t0.elapsed().as_secs_f64());
    }
    let best_total = |tree: &Tree, connected: &[(usize, f64)]| -> Option<f64> {
        connected
            .iter()
            .map(|&(i, link)| tree.cost[i] + link)
            .min_by(f64::total_cmp)
    };

    for iter in 1..=opts.max_iterations {
        let target: Vec<f64> = if rng.random::<f64>() < opts.goal_bias {
            goal.coords().to_vec()
        } else {
            env.bounds()
                .iter()
                .map(|b| rng.random_range(b[0]..=b[1]))
                .collect()
        };
        // nearest by Euclidean distance, first index on ties
        let mut ni = 0;
        let mut nd = f64::INFINITY;
        for (i, q) in tree.nodes.iter().enumerate() {
            let dist: f64 = q
                .iter()
                .zip(&target)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if dist < nd {
                nd = dist;
                ni = i;
            }
        }
        let dist = nd.sqrt();
        if dist < 1e-12 {
            observer(iter, best_total(&tree, &connected));
            continue;
        }
        let scale = opts.step_size.min(dist) / dist;
        let new: Vec<f64> = tree.nodes[ni]
            .iter()
            .zip(&target)
            .map(|(a, b)| a + (b - a) * scale)
            .collect();
        if !env.is_free_raw(&new) {
            observer(iter, best_total(&tree, &connected));
            continue;
        }

        let n = tree.nodes.len() as f64;
        let radius = (opts.neighbor_radius_gamma * (n.ln().max(0.0) / n).powf(1.0 / d as f64))
            .min(opts.step_size);
        let mut near: Vec<usize> = (0..tree.nodes.len())
            .filter(|&i| euclidean(&tree.nodes[i], &new) <= radius)
            .collect();
        if !near.contains(&ni) {
            near.push(ni);
        }

        let mut best_parent = None;
        let mut best_cost = f64::INFINITY;
        for &j in &near {
            let c = tree.cost[j] + euclidean(&tree.nodes[j], &new);
            if c < best_cost && env.segment_free_raw(&tree.nodes[j], &new, res) {
                best_cost = c;
                best_parent = Some(j);
            }
        }
        let Some(bp) = best_parent else {
            observer(iter, best_total(&tree, &connected));
            continue;
        };
        let idx = tree.push(new.clone(), bp, best_cost);

        for &j in &near {
            if j == bp {
                continue;
            }
            let via = tree.cost[idx] + euclidean(&new, &tree.nodes[j]);
            if via + 1e-12 < tree.cost[j] && env.segment_free_raw(&new, &tree.nodes[j], res) {
                tree.reparent(j, idx, via);
            }
        }

        if let Some(link) = goal_link(&tree, idx) {
            connected.push((idx, link));
            if first_solution.is_none() {
                first_solution = Some(t0.elapsed().as_secs_f64());
            }
        }
        observer(iter, best_total(&tree, &connected));
    }

    let best = connected
        .iter()
        .min_by(|a, b| (tree.cost[a.0] + a.1).total_cmp(&(tree.cost[b.0] + b.1)));
    let (path, status) = match best {
        Some(&(node, _)) => {
            let mut rev = vec![goal.coords().to_vec()];
            let mut u = node;
            loop {
                if rev.last().map(|q| q == &tree.nodes[u]) != Some(true) {
                    rev.push(tree.nodes[u].clone());
                }
                if u == 0 {
                    break;
                }
                u = tree.parent[u];
            }
            rev.reverse();
            let path: Vec<Config> = rev
                .into_iter()
                .map(|q| Config::new(q).expect("tree nodes are finite"))
                .collect();
            (path, RolloutStatus::Success)
        }
        None => (vec![start.clone()], RolloutStatus::MaxStepsExceeded),
    };

    Ok(RolloutResult {
        path,
        status,
        steps_taken: opts.max_iterations,
        repairs_invoked: 0,
        wall_time: t0.elapsed().as_secs_f64(),
        per_step_times: Vec::new(),
        first_solution_wall_time: first_solution,
    })
}

pub fn rrt_star(
    env: &Environment,
    start: &Config,
    goal: &Config,
    opts: &RrtStarOptions,
) -> Result<RolloutResult, RolloutError> {
    rrt_star_observed(env, start, goal, opts, |_, _| {})
}
