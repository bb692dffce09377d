//! Online planning with a trained net: iterate next-waypoint predictions
//! from start toward goal, repairing collisions with random lateral steps
//! and shortcutting the final path. Includes the bidirectional variant in
//! which two branches chase each other's heads.

use crate::env::{euclidean, Config, EnvError, Environment};
use crate::network::LstmNet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum RolloutError {
    #[error("start configuration is not collision-free")]
    InfeasibleStart,
    #[error("goal configuration is not collision-free")]
    InfeasibleGoal,
    #[error("configuration dimension {got} does not match the net/env dimension {want}")]
    DimMismatch { got: usize, want: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Clone)]
pub struct RolloutOptions {
    /// C-space distance at which the goal counts as reached (subject to a
    /// clear connecting segment).
    pub goal_threshold: f64,
    pub max_steps: usize,
    /// Repair step distance.
    pub epsilon: f64,
    pub repair_max_tries: usize,
    pub check_resolution: f64,
    pub bidirectional: bool,
    /// Head distance at which the two branches stitch (bidirectional only).
    pub meet_threshold: f64,
    pub seed: u64,
}

impl RolloutOptions {
    /// Defaults derived from the lattice the net was trained against:
    /// goal_threshold = min grid spacing, meet_threshold = 2x, epsilon =
    /// 1.5x, check_resolution = spacing/2, max_steps = 4x the grid diagonal
    /// in cells.
    pub fn for_env(env: &Environment, nodes_per_axis: usize) -> Self {
        let k = nodes_per_axis.max(2);
        let spacing = env
            .bounds()
            .iter()
            .map(|b| (b[1] - b[0]) / (k - 1) as f64)
            .fold(f64::INFINITY, f64::min);
        let d = env.dim() as f64;
        RolloutOptions {
            goal_threshold: spacing,
            max_steps: (4.0 * (k - 1) as f64 * d.sqrt()).ceil() as usize,
            epsilon: 1.5 * spacing,
            repair_max_tries: 100,
            check_resolution: spacing / 2.0,
            bidirectional: false,
            meet_threshold: 2.0 * spacing,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RolloutStatus {
    Success,
    MaxStepsExceeded,
    RepairExhausted,
}

#[derive(Debug, Clone)]
pub struct RolloutResult {
    pub path: Vec<Config>,
    pub status: RolloutStatus,
    pub steps_taken: usize,
    pub repairs_invoked: usize,
    pub wall_time: f64,
    /// Prediction time per net step (excludes collision checks and repair).
    pub per_step_times: Vec<f64>,
    /// Set by planners with an anytime phase (RRT*): seconds until the
    /// first feasible solution.
    pub first_solution_wall_time: Option<f64>,
}

/// On-disk form of a planning result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathFile {
    pub env_hash: String,
    pub status: RolloutStatus,
    pub waypoints: Vec<Vec<f64>>,
    pub wall_time_s: f64,
    pub steps: usize,
    pub repairs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_solution_wall_time_s: Option<f64>,
}

impl RolloutResult {
    pub fn to_path_file(&self, env_hash: &str) -> PathFile {
        PathFile {
            env_hash: env_hash.to_string(),
            status: self.status,
            waypoints: self.path.iter().map(|c| c.coords().to_vec()).collect(),
            wall_time_s: self.wall_time,
            steps: self.steps_taken,
            repairs: self.repairs_invoked,
            first_solution_wall_time_s: self.first_solution_wall_time,
        }
    }

    pub fn path_length(&self) -> f64 {
        crate::env::polyline_length(&self.path)
    }
}

/// Checks the full validity contract: exact endpoints, free waypoints, and
/// collision-free edges at the given resolution.
pub fn validate_path(
    env: &Environment,
    path: &[Config],
    start: &Config,
    goal: &Config,
    resolution: f64,
) -> Result<(), String> {
    if path.is_empty() {
        return Err("empty path".into());
    }
    if path[0].coords() != start.coords() {
        return Err("path does not begin at the start".into());
    }
    if path.last().unwrap().coords() != goal.coords() {
        return Err("path does not end at the goal".into());
    }
    for (i, w) in path.iter().enumerate() {
        match env.is_free(w) {
            Ok(true) => {}
            Ok(false) => return Err(format!("waypoint {i} is in collision")),
            Err(e) => return Err(e.to_string()),
        }
    }
    for (i, pair) in path.windows(2).enumerate() {
        match env.segment_free(&pair[0], &pair[1], resolution) {
            Ok(true) => {}
            Ok(false) => return Err(format!("edge {i} is in collision")),
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(())
}

fn check_query(
    env: &Environment,
    net: &LstmNet,
    start: &Config,
    goal: &Config,
) -> Result<(), RolloutError> {
    let d = env.dim();
    if net.dim() != d {
        return Err(RolloutError::DimMismatch {
            got: net.dim(),
            want: d,
        });
    }
    if start.len() != d {
        return Err(RolloutError::DimMismatch {
            got: start.len(),
            want: d,
        });
    }
    if goal.len() != d {
        return Err(RolloutError::DimMismatch {
            got: goal.len(),
            want: d,
        });
    }
    if !env.is_free(start)? {
        return Err(RolloutError::InfeasibleStart);
    }
    if !env.is_free(goal)? {
        return Err(RolloutError::InfeasibleGoal);
    }
    Ok(())
}

/// Samples random unit directions and returns the first point at distance
/// epsilon from `prev` that is free with a clear connecting segment, or
/// None after `repair_max_tries` attempts.
pub fn repair<R: Rng>(
    env: &Environment,
    prev: &Config,
    opts: &RolloutOptions,
    rng: &mut R,
) -> Option<Config> {
    let d = prev.len();
    let res = opts.check_resolution / 2.0;
    for _ in 0..opts.repair_max_tries {
        let mut u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        for v in &mut u {
            *v /= norm;
        }
        let cand: Vec<f64> = prev
            .coords()
            .iter()
            .zip(&u)
            .map(|(p, dir)| p + opts.epsilon * dir)
            .collect();
        if env.is_free_raw(&cand) && env.segment_free_raw(prev.coords(), &cand, res) {
            return Some(Config::new(cand).expect("finite arithmetic"));
        }
    }
    None
}

/// Greedy shortcutting: from each anchor keep the farthest point reachable
/// by a straight collision-free segment. Preserves endpoints; never makes
/// the path longer; idempotent.
pub fn rewire(env: &Environment, path: &[Config], check_resolution: f64) -> Vec<Config> {
    if path.len() < 3 {
        return path.to_vec();
    }
    let res = check_resolution / 2.0;
    let mut out = vec![path[0].clone()];
    let mut i = 0;
    while i < path.len() - 1 {
        let mut next = i + 1;
        for j in (i + 2..path.len()).rev() {
            if env.segment_free_raw(path[i].coords(), path[j].coords(), res) {
                next = j;
                break;
            }
        }
        out.push(path[next].clone());
        i = next;
    }
    out
}

/// Unidirectional rollout (the trained net chases a fixed goal), followed
/// by rewire. Never returns Success without the explicit goal-connection
/// check.
pub fn rollout(
    net: &LstmNet,
    env: &Environment,
    start: &Config,
    goal: &Config,
    opts: &RolloutOptions,
) -> Result<RolloutResult, RolloutError> {
    check_query(env, net, start, goal)?;
    let t0 = Instant::now();
    let res = opts.check_resolution / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut state = net.zero_state();
    let mut path = vec![start.clone()];
    let mut head = start.clone();
    let mut steps = 0usize;
    let mut repairs = 0usize;
    let mut per_step = Vec::new();

    let status = loop {
        if euclidean(&head, goal) <= opts.goal_threshold
            && env.segment_free_raw(head.coords(), goal.coords(), res)
        {
            path.push(goal.clone());
            break RolloutStatus::Success;
        }
        if steps >= opts.max_steps {
            break RolloutStatus::MaxStepsExceeded;
        }
        let mut aug = head.coords().to_vec();
        aug.extend_from_slice(goal.coords());
        let tp = Instant::now();
        let y = net
            .step(&mut state, &net.normalize(&aug))
            .expect("head and goal are free, hence in bounds");
        let cand = net.denormalize(&y);
        per_step.push(tp.elapsed().as_secs_f64());
        steps += 1;

        let ok = cand.iter().all(|v| v.is_finite())
            && env.is_free_raw(&cand)
            && env.segment_free_raw(head.coords(), &cand, res);
        let next = if ok {
            Config::new(cand).expect("checked finite")
        } else {
            repairs += 1;
            match repair(env, &head, opts, &mut rng) {
                Some(p) => p,
                None => break RolloutStatus::RepairExhausted,
            }
        };
        path.push(next.clone());
        head = next;
    };

    let path = rewire(env, &path, opts.check_resolution);
    Ok(RolloutResult {
        path,
        status,
        steps_taken: steps,
        repairs_invoked: repairs,
        wall_time: t0.elapsed().as_secs_f64(),
        per_step_times: per_step,
        first_solution_wall_time: None,
    })
}

/// Bidirectional rollout: branch A grows from the start, branch B from the
/// goal, alternating single steps (A on even turns), each conditioned on
/// the other's current head. Stitches when the heads are within
/// meet_threshold with a clear segment.
pub fn rollout_bidirectional(
    net: &LstmNet,
    env: &Environment,
    start: &Config,
    goal: &Config,
    opts: &RolloutOptions,
) -> Result<RolloutResult, RolloutError> {
    check_query(env, net, start, goal)?;
    let t0 = Instant::now();
    let res = opts.check_resolution / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut states = [net.zero_state(), net.zero_state()];
    let mut branches = [vec![start.clone()], vec![goal.clone()]];
    let mut steps = 0usize;
    let mut repairs = 0usize;
    let mut per_step = Vec::new();

    let status = loop {
        let (ha, hb) = (
            branches[0].last().unwrap().clone(),
            branches[1].last().unwrap().clone(),
        );
        if euclidean(&ha, &hb) <= opts.meet_threshold
            && env.segment_free_raw(ha.coords(), hb.coords(), res)
        {
            break RolloutStatus::Success;
        }
        if steps >= opts.max_steps {
            break RolloutStatus::MaxStepsExceeded;
        }
        let side = steps % 2;
        let (head, target) = if side == 0 { (&ha, &hb) } else { (&hb, &ha) };
        let mut aug = head.coords().to_vec();
        aug.extend_from_slice(target.coords());
        let tp = Instant::now();
        let y = net
            .step(&mut states[side], &net.normalize(&aug))
            .expect("branch heads are free, hence in bounds");
        let cand = net.denormalize(&y);
        per_step.push(tp.elapsed().as_secs_f64());
        steps += 1;

        let ok = cand.iter().all(|v| v.is_finite())
            && env.is_free_raw(&cand)
            && env.segment_free_raw(head.coords(), &cand, res);
        let next = if ok {
            Config::new(cand).expect("checked finite")
        } else {
            repairs += 1;
            match repair(env, head, opts, &mut rng) {
                Some(p) => p,
                None => break RolloutStatus::RepairExhausted,
            }
        };
        branches[side].push(next);
    };

    let mut path = branches[0].clone();
    if status == RolloutStatus::Success {
        path.extend(branches[1].iter().rev().cloned());
    }
    let path = rewire(env, &path, opts.check_resolution);
    Ok(RolloutResult {
        path,
        status,
        steps_taken: steps,
        repairs_invoked: repairs,
        wall_time: t0.elapsed().as_secs_f64(),
        per_step_times: per_step,
        first_solution_wall_time: None,
    })
}

/// Dispatches on `opts.bidirectional`.
pub fn plan(
    net: &LstmNet,
    env: &Environment,
    start: &Config,
    goal: &Config,
    opts: &RolloutOptions,
) -> Result<RolloutResult, RolloutError> {
    if opts.bidirectional {
        rollout_bidirectional(net, env, start, goal, opts)
    } else {
        rollout(net, env, start, goal, opts)
    }
}
