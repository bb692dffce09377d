//! Benchmark harness: shared-query planner comparisons.
//!
//! A suite draws `n_trials` start/goal pairs once and runs every planner on
//! every pair, so per-query statistics (length ratios in particular) are
//! paired. Wall time is measured around the planning call only; grid
//! construction and model loading happen before the suite starts.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::derive_seed;
use crate::env::{polyline_length, Config};
use crate::network::LstmNet;
use crate::rollout::{self, RolloutOptions, RolloutStatus};
use crate::rrt_star::{self, RrtStarOptions};
use crate::search::{GridGraph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlannerKind {
    OracleNet,
    AStar,
    RrtStar,
}

impl PlannerKind {
    pub fn label(self) -> &'static str {
        match self {
            PlannerKind::OracleNet => "OracleNet",
            PlannerKind::AStar => "AStar",
            PlannerKind::RrtStar => "RrtStar",
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PlannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "oraclenet" => Ok(PlannerKind::OracleNet),
            "astar" | "a*" => Ok(PlannerKind::AStar),
            "rrtstar" | "rrt*" => Ok(PlannerKind::RrtStar),
            other => Err(format!(
                "unknown planner '{other}' (expected oraclenet, astar, or rrtstar)"
            )),
        }
    }
}

/// A planner wired up and ready to answer queries on one environment.
pub enum PlannerSpec<'a> {
    /// Trained net rolled out with the given options. The per-trial repair
    /// seed is derived from `options.seed` and the trial index.
    OracleNet {
        net: &'a LstmNet,
        options: RolloutOptions,
    },
    /// Grid A* on the suite grid, output rewired at the grid's resolution.
    AStar,
    /// Sampling baseline; the per-trial seed is derived from `options.seed`.
    RrtStar { options: RrtStarOptions },
}

impl PlannerSpec<'_> {
    pub fn kind(&self) -> PlannerKind {
        match self {
            PlannerSpec::OracleNet { .. } => PlannerKind::OracleNet,
            PlannerSpec::AStar => PlannerKind::AStar,
            PlannerSpec::RrtStar { .. } => PlannerKind::RrtStar,
        }
    }
}

/// One planner's answer to one query.
#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub trial_id: usize,
    pub planner: PlannerKind,
    pub env_id: String,
    pub start: Config,
    pub goal: Config,
    pub success: bool,
    /// Seconds around the planning call (includes repair and rewire).
    pub wall_time: f64,
    /// Euclidean length post-rewire; `None` whenever `success` is false.
    pub path_length: Option<f64>,
    pub steps: usize,
}

/// Draws `n_trials` distinct start/goal node pairs from the grid's free set
/// and runs every planner on every pair. Records come back grouped by trial
/// and, within a trial, in `planners` order. `jobs > 1` runs trials in
/// parallel; keep the default 1 for timing suites.
pub fn run_suite(
    grid: &GridGraph,
    env_id: &str,
    planners: &[PlannerSpec],
    n_trials: usize,
    seed: u64,
    jobs: usize,
) -> Vec<BenchRecord> {
    assert!(!planners.is_empty(), "run_suite needs at least one planner");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free = grid.free_nodes();
    let mut queries = Vec::with_capacity(n_trials);
    for _ in 0..n_trials {
        let start = free[rng.random_range(0..free.len())];
        let goal = loop {
            let g = free[rng.random_range(0..free.len())];
            if g != start || free.len() == 1 {
                break g;
            }
        };
        queries.push((start, goal));
    }

    let run_trial = |(trial_id, &(start, goal)): (usize, &(NodeId, NodeId))| {
        planners
            .iter()
            .enumerate()
            .map(|(p, spec)| {
                let trial_seed = derive_seed(seed, (trial_id * planners.len() + p) as u64);
                run_one(grid, env_id, spec, trial_id, start, goal, trial_seed)
            })
            .collect::<Vec<_>>()
    };

    let per_trial: Vec<Vec<BenchRecord>> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("failed to build worker pool");
        pool.install(|| {
            use rayon::prelude::*;
            queries.par_iter().enumerate().map(run_trial).collect()
        })
    } else {
        queries.iter().enumerate().map(run_trial).collect()
    };
    per_trial.into_iter().flatten().collect()
}

fn run_one(
    grid: &GridGraph,
    env_id: &str,
    spec: &PlannerSpec,
    trial_id: usize,
    start: NodeId,
    goal: NodeId,
    trial_seed: u64,
) -> BenchRecord {
    let start_cfg = grid.node_config(start);
    let goal_cfg = grid.node_config(goal);
    let (success, wall_time, path_length, steps) = match spec {
        PlannerSpec::OracleNet { net, options } => {
            let mut opts = options.clone();
            opts.seed = trial_seed;
            let res = rollout::plan(net, grid.env(), &start_cfg, &goal_cfg, &opts)
                .expect("bench queries are drawn from the free set");
            let ok = res.status == RolloutStatus::Success;
            (
                ok,
                res.wall_time,
                ok.then(|| res.path_length()),
                res.steps_taken,
            )
        }
        PlannerSpec::AStar => {
            let t0 = Instant::now();
            let found = grid
                .astar(start, goal)
                .expect("bench endpoints are free nodes");
            match found {
                Some(path) => {
                    let configs = grid.path_configs(&path);
                    let rewired =
                        rollout::rewire(grid.env(), &configs, grid.min_spacing() / 2.0);
                    let wall = t0.elapsed().as_secs_f64();
                    let steps = path.nodes.len().saturating_sub(1);
                    (true, wall, Some(polyline_length(&rewired)), steps)
                }
                None => (false, t0.elapsed().as_secs_f64(), None, 0),
            }
        }
        PlannerSpec::RrtStar { options } => {
            let mut opts = options.clone();
            opts.seed = trial_seed;
            let res = rrt_star::rrt_star(grid.env(), &start_cfg, &goal_cfg, &opts)
                .expect("bench queries are drawn from the free set");
            let ok = res.status == RolloutStatus::Success;
            (
                ok,
                res.wall_time,
                ok.then(|| res.path_length()),
                res.steps_taken,
            )
        }
    };
    BenchRecord {
        trial_id,
        planner: spec.kind(),
        env_id: env_id.to_string(),
        start: start_cfg,
        goal: goal_cfg,
        success,
        wall_time,
        path_length,
        steps,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct PlannerSummary {
    pub planner: PlannerKind,
    pub trials: usize,
    pub successes: usize,
    /// successes / trials (failures stay in the denominator).
    pub success_rate: f64,
    /// Mean/std over successful trials only; NaN when there are none.
    pub mean_wall_time: f64,
    pub std_wall_time: f64,
    pub mean_length: f64,
    pub std_length: f64,
    pub time_histogram: Vec<HistogramBin>,
    /// (path_length, wall_time) per successful trial, in trial order.
    pub length_time: Vec<(f64, f64)>,
}

/// Per-query length ratio numerator/denominator over trials where both
/// planners succeeded.
#[derive(Debug, Clone)]
pub struct RatioSummary {
    pub numerator: PlannerKind,
    pub denominator: PlannerKind,
    pub pairs: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub n_trials: usize,
    pub planners: Vec<PlannerSummary>,
    pub ratios: Vec<RatioSummary>,
}

const HISTOGRAM_BINS: usize = 10;

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn histogram(values: &[f64]) -> Vec<HistogramBin> {
    if values.is_empty() {
        return Vec::new();
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return vec![HistogramBin {
            lo,
            hi,
            count: values.len(),
        }];
    }
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let mut bins: Vec<HistogramBin> = (0..HISTOGRAM_BINS)
        .map(|i| HistogramBin {
            lo: lo + i as f64 * width,
            hi: lo + (i + 1) as f64 * width,
            count: 0,
        })
        .collect();
    for &v in values {
        let idx = (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
        bins[idx].count += 1;
    }
    bins
}

/// Aggregates records into per-planner statistics and paired length ratios.
/// Pure: the same records always produce the same report. Std deviations are
/// sample (n-1).
pub fn summarize(records: &[BenchRecord]) -> BenchReport {
    if records.is_empty() {
        return BenchReport::default();
    }
    let mut kinds: Vec<PlannerKind> = Vec::new();
    for r in records {
        if !kinds.contains(&r.planner) {
            kinds.push(r.planner);
        }
    }
    let n_trials = records
        .iter()
        .map(|r| r.trial_id + 1)
        .max()
        .unwrap_or(0);

    let mut planners = Vec::with_capacity(kinds.len());
    for &kind in &kinds {
        let of_kind: Vec<&BenchRecord> =
            records.iter().filter(|r| r.planner == kind).collect();
        let wins: Vec<&BenchRecord> = of_kind.iter().filter(|r| r.success).copied().collect();
        let times: Vec<f64> = wins.iter().map(|r| r.wall_time).collect();
        let lengths: Vec<f64> = wins
            .iter()
            .filter_map(|r| r.path_length)
            .collect();
        let (mean_wall_time, std_wall_time) = mean_std(&times);
        let (mean_length, std_length) = mean_std(&lengths);
        planners.push(PlannerSummary {
            planner: kind,
            trials: of_kind.len(),
            successes: wins.len(),
            success_rate: wins.len() as f64 / of_kind.len().max(1) as f64,
            mean_wall_time,
            std_wall_time,
            mean_length,
            std_length,
            time_histogram: histogram(&times),
            length_time: wins
                .iter()
                .filter_map(|r| r.path_length.map(|l| (l, r.wall_time)))
                .collect(),
        });
    }

    let mut ratios = Vec::new();
    for &a in &kinds {
        for &b in &kinds {
            if a == b {
                continue;
            }
            let mut values = Vec::new();
            for t in 0..n_trials {
                let len_of = |k: PlannerKind| {
                    records
                        .iter()
                        .find(|r| r.trial_id == t && r.planner == k && r.success)
                        .and_then(|r| r.path_length)
                };
                if let (Some(la), Some(lb)) = (len_of(a), len_of(b)) {
                    values.push(la / lb);
                }
            }
            let (mean, std) = mean_std(&values);
            ratios.push(RatioSummary {
                numerator: a,
                denominator: b,
                pairs: values.len(),
                mean,
                std,
            });
        }
    }

    BenchReport {
        n_trials,
        planners,
        ratios,
    }
}

/// Records as CSV. `path_length` is empty on failed trials.
pub fn records_to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from("trial_id,planner,env_id,success,wall_time_s,path_length,steps\n");
    for r in records {
        let length = r
            .path_length
            .map(|l| l.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.trial_id, r.planner, r.env_id, r.success, r.wall_time, length, r.steps
        ));
    }
    out
}

fn fmt_stat(v: f64) -> String {
    if v.is_nan() {
        "-".to_string()
    } else {
        format!("{v:.4}")
    }
}

/// Summary as a Markdown table: one row per planner plus a section of paired
/// length ratios. Values are mean (sample std).
pub fn report_to_markdown(report: &BenchReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("# Benchmark summary ({} trials)\n\n", report.n_trials));
    out.push_str("| planner | success rate | wall time s, mean (std) | path length, mean (std) |\n");
    out.push_str("|---|---|---|---|\n");
    for p in &report.planners {
        out.push_str(&format!(
            "| {} | {}/{} ({:.1}%) | {} ({}) | {} ({}) |\n",
            p.planner,
            p.successes,
            p.trials,
            100.0 * p.success_rate,
            fmt_stat(p.mean_wall_time),
            fmt_stat(p.std_wall_time),
            fmt_stat(p.mean_length),
            fmt_stat(p.std_length),
        ));
    }
    if !report.ratios.is_empty() {
        out.push_str("\n## Path-length ratios (both-succeeded queries)\n\n");
        out.push_str("| ratio | pairs | mean (std) |\n|---|---|---|\n");
        for r in &report.ratios {
            out.push_str(&format!(
                "| {}/{} | {} | {} ({}) |\n",
                r.numerator,
                r.denominator,
                r.pairs,
                fmt_stat(r.mean),
                fmt_stat(r.std),
            ));
        }
    }
    out.push_str("\nTimes cover the planning call only; std is sample (n-1).\n");
    out
}

/// Wall-time histograms as CSV rows `planner,bin_lo,bin_hi,count`.
pub fn histogram_csv(report: &BenchReport) -> String {
    let mut out = String::from("planner,bin_lo,bin_hi,count\n");
    for p in &report.planners {
        for b in &p.time_histogram {
            out.push_str(&format!("{},{},{},{}\n", p.planner, b.lo, b.hi, b.count));
        }
    }
    out
}

/// (length, time) scatter series as CSV rows `planner,path_length,wall_time_s`.
pub fn scatter_csv(report: &BenchReport) -> String {
    let mut out = String::from("planner,path_length,wall_time_s\n");
    for p in &report.planners {
        for (length, time) in &p.length_time {
            out.push_str(&format!("{},{},{}\n", p.planner, length, time));
        }
    }
    out
}
