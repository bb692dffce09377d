//! Acceptance gate: ten sequential checks, one verdict line per check,
//! nonzero exit if any fails. Thresholds are pinned as constants below.
//!
//! Check 3 trains a full desk-scale model, so the whole run takes a few
//! minutes. Check 9 repeats the pipeline on a 3-link arm at 10x the corpus
//! size and only runs when ORACLENET_ACCEPT_SLOW=1; it prints SKIP
//! otherwise.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oraclenet::bench::{run_suite, summarize, BenchRecord, PlannerKind, PlannerSpec};
use oraclenet::dataset::{generate_paths, split_paths, train_test_split};
use oraclenet::env::{euclidean, polyline_length, Config, Environment, Shape};
use oraclenet::network::train::{mse_loss, train, TrainConfig};
use oraclenet::network::{preset, LstmNet};
use oraclenet::rollout::{self, rewire, validate_path, RolloutOptions, RolloutResult, RolloutStatus};
use oraclenet::rrt_star::{rrt_star_observed, RrtStarOptions};
use oraclenet::search::{GridGraph, NodeId};

// 1: A* vs an independent Dijkstra on randomized instances.
const ORACLE_INSTANCES_2D: usize = 140;
const ORACLE_INSTANCES_ARM: usize = 60;
const ORACLE_BUDGET_S: f64 = 10.0;

// 2: analytic BPTT gradients vs central finite differences.
const GRAD_LAYERS: usize = 2;
const GRAD_HIDDEN: usize = 8;
const GRAD_STEPS: usize = 5;
const GRAD_EPS: f64 = 1e-5;
const GRAD_REL_TOL: f64 = 1e-4;

// 3: desk-scale 2D suite (trains the model shared by 4, 5, and 6).
const DESK_ENV: &str = "simple1";
const DESK_K: usize = 100;
const DESK_PATHS: usize = 2000;
const DESK_CORPUS_SEED: u64 = 42;
const DESK_TRAIN_SEED: u64 = 7;
const DESK_EPOCHS: usize = 4;
const DESK_BATCH: usize = 8;
const DESK_VAL_FRAC: f64 = 0.1;
const DESK_TRIALS: usize = 200;
const DESK_SUITE_SEED: u64 = 1234;
const DESK_SUCCESS_MIN: f64 = 0.95;
const DESK_RATIO_LO: f64 = 0.90;
const DESK_RATIO_HI: f64 = 1.15;

// 5: timing shape thresholds.
const STEP_COV_MAX: f64 = 0.5;
const TIME_R2_MIN: f64 = 0.8;
const COV_ENVS: [&str; 4] = ["simple1", "simple2", "difficult1", "difficult2"];
const COV_QUERIES_PER_ENV: usize = 25;

// 7: rewire properties over random valid paths.
const REWIRE_PATHS: usize = 1000;
const REWIRE_RES: f64 = 1.0;

// 8: sampling baseline in an empty world.
const RRT_ITERATIONS: usize = 5000;
const RRT_SEED: u64 = 4;
const RRT_OPT_SLACK: f64 = 1.05;
const RRT_CHECKPOINT_EVERY: usize = 500;

// 9: 3-link arm suite (slow; gated behind ORACLENET_ACCEPT_SLOW=1).
const ARM_K: usize = 25;
const ARM_PATHS: usize = 20_000;
const ARM_CORPUS_SEED: u64 = 4242;
const ARM_EPOCHS: usize = 6;
const ARM_TRIALS: usize = 100;
const ARM_SUITE_SEED: u64 = 91;
const ARM_SUCCESS_MIN: f64 = 0.90;
const ARM_RATIO_LO: f64 = 0.85;
const ARM_RATIO_HI: f64 = 1.20;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn main() {
    let t0 = Instant::now();
    let mut failures = 0usize;
    let mut skips = 0usize;
    let mut tally = |n: usize, name: &str, v: Verdict| match v {
        Verdict::Pass(d) => println!("{n:2} {name:<26} PASS  {d}"),
        Verdict::Fail(d) => {
            failures += 1;
            println!("{n:2} {name:<26} FAIL  {d}");
        }
        Verdict::Skip(d) => {
            skips += 1;
            println!("{n:2} {name:<26} SKIP  {d}");
        }
    };

    tally(1, "oracle exactness", oracle_exactness());
    tally(2, "gradient check", gradient_check());

    let (v3, desk) = desk_suite();
    tally(3, "desk-scale 2d suite", v3);
    tally(4, "bidirectional advantage", bidirectional_advantage(desk.as_ref()));
    tally(5, "fixed-time stepping", fixed_time_stepping(desk.as_ref()));
    tally(6, "validity contract", validity_contract(desk.as_ref()));
    tally(7, "rewire properties", rewire_properties());
    tally(8, "rrt* sanity", rrt_star_sanity());
    tally(9, "3-link arm suite", arm_suite());
    tally(10, "artifact determinism", artifact_determinism());

    let state = if failures == 0 { "ok" } else { "FAILED" };
    println!(
        "acceptance: {state}, {} passed, {failures} failed, {skips} skipped in {:.1} s",
        10 - failures - skips,
        t0.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}

fn cfg(coords: &[f64]) -> Config {
    Config::new(coords.to_vec()).expect("finite test coordinates")
}

// --- 1: A* cost equals Dijkstra cost on random grids -----------------------

fn random_gridworld(rng: &mut ChaCha8Rng) -> Environment {
    let n_obstacles = rng.random_range(2..7);
    let obstacles: Vec<Shape> = (0..n_obstacles)
        .map(|_| Shape::Circle {
            center: [rng.random_range(5.0..95.0), rng.random_range(5.0..95.0)],
            radius: rng.random_range(4.0..18.0),
        })
        .collect();
    Environment::gridworld2d([[0.0, 100.0], [0.0, 100.0]], obstacles).expect("valid bounds")
}

fn random_arm(rng: &mut ChaCha8Rng) -> Environment {
    let n_obstacles = rng.random_range(1..4);
    let obstacles: Vec<Shape> = (0..n_obstacles)
        .map(|_| {
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let dist = rng.random_range(1.2..2.8);
            Shape::Circle {
                center: [dist * angle.cos(), dist * angle.sin()],
                radius: rng.random_range(0.2..0.6),
            }
        })
        .collect();
    Environment::planar_arm(vec![1.0, 1.0, 1.0], obstacles).expect("valid links")
}

fn oracle_exactness() -> Verdict {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0001);
    let mut checked = 0usize;
    let mut attempts = 0usize;
    let total = ORACLE_INSTANCES_2D + ORACLE_INSTANCES_ARM;
    while checked < total {
        attempts += 1;
        if attempts > 4 * total {
            return Verdict::Fail(format!(
                "instance generation stalled at {checked}/{total}"
            ));
        }
        let arm_turn = checked >= ORACLE_INSTANCES_2D;
        let env = if arm_turn {
            random_arm(&mut rng)
        } else {
            random_gridworld(&mut rng)
        };
        let k = if arm_turn {
            rng.random_range(5..=7)
        } else {
            rng.random_range(8..=15)
        };
        let g = match GridGraph::build(&env, k) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let free = g.free_nodes();
        if free.len() < 2 {
            continue;
        }
        let start = free[rng.random_range(0..free.len())];
        let goal = free[rng.random_range(0..free.len())];
        let expected = common::dijkstra(&g, start, goal);
        let got = g.astar(start, goal).expect("endpoints are free nodes");
        match (expected, got) {
            (None, None) => {}
            (Some(want), Some(path)) => {
                if path.cost != want {
                    return Verdict::Fail(format!(
                        "cost mismatch on instance {checked}: A* {} vs Dijkstra {want}",
                        path.cost
                    ));
                }
                if path.nodes.first() != Some(&start) || path.nodes.last() != Some(&goal) {
                    return Verdict::Fail(format!("endpoint drift on instance {checked}"));
                }
            }
            (want, got) => {
                return Verdict::Fail(format!(
                    "reachability disagrees on instance {checked}: dijkstra {} astar {}",
                    want.is_some(),
                    got.is_some()
                ))
            }
        }
        checked += 1;
    }
    let dt = t0.elapsed().as_secs_f64();
    if dt >= ORACLE_BUDGET_S {
        return Verdict::Fail(format!(
            "{total} instances matched but took {dt:.1} s (budget {ORACLE_BUDGET_S} s)"
        ));
    }
    Verdict::Pass(format!(
        "{total} instances, A* cost == Dijkstra cost, {dt:.1} s (budget {ORACLE_BUDGET_S} s)"
    ))
}

// --- 2: BPTT gradients vs central differences ------------------------------

fn gradient_check() -> Verdict {
    let bounds = [[-1.0, 1.0], [-1.0, 1.0]];
    let hidden = vec![GRAD_HIDDEN; GRAD_LAYERS];
    let net = LstmNet::new(2, &hidden, &bounds, 0xC2);
    let inputs: Vec<Vec<f64>> = (0..GRAD_STEPS)
        .map(|t| {
            (0..4)
                .map(|j| (((t * 4 + j) as f64) * 1.3 + 0.5).sin() * 0.8)
                .collect()
        })
        .collect();
    let targets: Vec<Vec<f64>> = (0..GRAD_STEPS)
        .map(|t| (0..2).map(|j| (((t * 2 + j) as f64) * 0.9).cos() * 0.8).collect())
        .collect();

    let (outs, tape) = net.forward_tape(&inputs);
    let scale = 2.0 / (2.0 * GRAD_STEPS as f64);
    let dy: Vec<Vec<f64>> = outs
        .iter()
        .zip(&targets)
        .map(|(o, t)| o.iter().zip(t).map(|(a, b)| scale * (a - b)).collect())
        .collect();
    let mut grads = vec![0.0; net.param_count()];
    net.backward(&tape, &dy, &mut grads);

    let loss = |net: &LstmNet| -> f64 {
        let outs = net.forward_sequence(&inputs).expect("inputs in range");
        mse_loss(&outs, &targets, &vec![true; GRAD_STEPS]).expect("aligned lengths")
    };
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    let mut worst_at = 0usize;
    for k in 0..net.param_count() {
        let orig = probe.params()[k];
        probe.params_mut()[k] = orig + GRAD_EPS;
        let lp = loss(&probe);
        probe.params_mut()[k] = orig - GRAD_EPS;
        let lm = loss(&probe);
        probe.params_mut()[k] = orig;
        let num = (lp - lm) / (2.0 * GRAD_EPS);
        // denominator floored at 1e-5 so finite-difference noise does not
        // dominate the ratio for vanishing gradients
        let rel = (grads[k] - num).abs() / (grads[k].abs() + num.abs()).max(1e-5);
        if rel > worst {
            worst = rel;
            worst_at = k;
        }
    }
    if worst < GRAD_REL_TOL {
        Verdict::Pass(format!(
            "{} params, worst rel err {worst:.2e} (tol {GRAD_REL_TOL:.0e})",
            net.param_count()
        ))
    } else {
        Verdict::Fail(format!(
            "param {worst_at}: rel err {worst:.2e} exceeds {GRAD_REL_TOL:.0e}"
        ))
    }
}

// --- 3-6 shared fixture: trained desk-scale model and paired rollouts ------

struct Desk {
    env: Environment,
    grid: GridGraph,
    opts: RolloutOptions,
    net: LstmNet,
    records: Vec<BenchRecord>,
    queries: Vec<(NodeId, NodeId)>,
    bi: Vec<RolloutResult>,
    uni: Vec<RolloutResult>,
}

/// Same draw as `run_suite` with the same seed, so the manual rollouts below
/// answer exactly the queries the bench records describe.
fn draw_queries(grid: &GridGraph, seed: u64, n: usize) -> Vec<(NodeId, NodeId)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free = grid.free_nodes();
    (0..n)
        .map(|_| {
            let start = free[rng.random_range(0..free.len())];
            let goal = loop {
                let g = free[rng.random_range(0..free.len())];
                if g != start || free.len() == 1 {
                    break g;
                }
            };
            (start, goal)
        })
        .collect()
}

fn desk_suite() -> (Verdict, Option<Desk>) {
    let env = Environment::bundled(DESK_ENV).expect("bundled env");
    let grid = match GridGraph::build(&env, DESK_K) {
        Ok(g) => g,
        Err(e) => return (Verdict::Fail(format!("grid build: {e}")), None),
    };
    let gen = match generate_paths(&grid, DESK_PATHS, DESK_CORPUS_SEED, 1) {
        Ok(g) => g,
        Err(e) => return (Verdict::Fail(format!("corpus: {e}")), None),
    };
    if gen.paths.len() < DESK_PATHS {
        return (
            Verdict::Fail(format!("corpus short: {}/{DESK_PATHS} paths", gen.paths.len())),
            None,
        );
    }
    let samples = split_paths(&gen.paths);
    let mut rng = ChaCha8Rng::seed_from_u64(DESK_TRAIN_SEED);
    let (train_samples, val_samples) = train_test_split(samples, 1.0 - DESK_VAL_FRAC, &mut rng);
    let mut net = LstmNet::new(
        env.dim(),
        &preset("ci").expect("ci preset"),
        env.bounds(),
        DESK_TRAIN_SEED,
    );
    let cfg = TrainConfig {
        epochs: DESK_EPOCHS,
        batch_size: DESK_BATCH,
        seed: DESK_TRAIN_SEED,
        ..TrainConfig::default()
    };
    if let Err(e) = train(&mut net, &train_samples, &val_samples, &cfg) {
        return (Verdict::Fail(format!("training: {e}")), None);
    }

    let opts = RolloutOptions {
        bidirectional: true,
        ..RolloutOptions::for_env(&env, DESK_K)
    };
    let specs = [
        PlannerSpec::OracleNet {
            net: &net,
            options: opts.clone(),
        },
        PlannerSpec::AStar,
    ];
    let records = run_suite(&grid, DESK_ENV, &specs, DESK_TRIALS, DESK_SUITE_SEED, 1);
    let report = summarize(&records);
    let on = report
        .planners
        .iter()
        .find(|p| p.planner == PlannerKind::OracleNet)
        .expect("oraclenet ran");
    let ratio = report
        .ratios
        .iter()
        .find(|r| r.numerator == PlannerKind::OracleNet && r.denominator == PlannerKind::AStar)
        .expect("paired ratio present");

    // the same queries again, keeping full results for checks 4-6
    let queries = draw_queries(&grid, DESK_SUITE_SEED, DESK_TRIALS);
    let run_all = |bidirectional: bool| -> Vec<RolloutResult> {
        queries
            .iter()
            .enumerate()
            .map(|(i, &(s, g))| {
                let o = RolloutOptions {
                    bidirectional,
                    seed: 1000 + i as u64,
                    ..opts.clone()
                };
                rollout::plan(&net, &env, &grid.node_config(s), &grid.node_config(g), &o)
                    .expect("queries drawn from the free set")
            })
            .collect()
    };
    let bi = run_all(true);
    let uni = run_all(false);

    let verdict = if on.success_rate < DESK_SUCCESS_MIN {
        Verdict::Fail(format!(
            "success {}/{} = {:.3} below {DESK_SUCCESS_MIN}",
            on.successes, on.trials, on.success_rate
        ))
    } else if !(DESK_RATIO_LO..=DESK_RATIO_HI).contains(&ratio.mean) {
        Verdict::Fail(format!(
            "length ratio {:.4} outside [{DESK_RATIO_LO}, {DESK_RATIO_HI}]",
            ratio.mean
        ))
    } else {
        Verdict::Pass(format!(
            "success {}/{}, net/A* length ratio {:.4} in [{DESK_RATIO_LO}, {DESK_RATIO_HI}]",
            on.successes, on.trials, ratio.mean
        ))
    };
    (
        verdict,
        Some(Desk {
            env,
            grid,
            opts,
            net,
            records,
            queries,
            bi,
            uni,
        }),
    )
}

fn success_count(results: &[RolloutResult]) -> usize {
    results
        .iter()
        .filter(|r| r.status == RolloutStatus::Success)
        .count()
}

// --- 4: bidirectional success rate >= unidirectional -----------------------

fn bidirectional_advantage(desk: Option<&Desk>) -> Verdict {
    let Some(desk) = desk else {
        return Verdict::Fail("desk fixture unavailable".into());
    };
    let bi = success_count(&desk.bi);
    let uni = success_count(&desk.uni);
    let n = desk.queries.len();
    if bi >= uni {
        Verdict::Pass(format!(
            "bidirectional {bi}/{n} >= unidirectional {uni}/{n} on shared queries"
        ))
    } else {
        Verdict::Fail(format!("bidirectional {bi}/{n} < unidirectional {uni}/{n}"))
    }
}

// --- 5: per-step time is flat; total time scales with steps ----------------

fn ols_r2(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = (sxy * sxy) / (sxx * syy);
    (slope, r2)
}

fn fixed_time_stepping(desk: Option<&Desk>) -> Verdict {
    let Some(desk) = desk else {
        return Verdict::Fail("desk fixture unavailable".into());
    };

    // mean prediction time per env; the net sees fresh obstacle layouts but
    // its per-step cost should not
    let mut env_means = Vec::with_capacity(COV_ENVS.len());
    for name in COV_ENVS {
        let mut times = Vec::new();
        if name == DESK_ENV {
            for r in &desk.bi {
                times.extend_from_slice(&r.per_step_times);
            }
        } else {
            let env = Environment::bundled(name).expect("bundled env");
            let grid = match GridGraph::build(&env, DESK_K) {
                Ok(g) => g,
                Err(e) => return Verdict::Fail(format!("{name} grid: {e}")),
            };
            let queries = draw_queries(&grid, DESK_SUITE_SEED ^ 0xC0F, COV_QUERIES_PER_ENV);
            for (i, &(s, g)) in queries.iter().enumerate() {
                let o = RolloutOptions {
                    seed: 5000 + i as u64,
                    ..desk.opts.clone()
                };
                let r = rollout::plan(&desk.net, &env, &grid.node_config(s), &grid.node_config(g), &o)
                    .expect("queries drawn from the free set");
                times.extend_from_slice(&r.per_step_times);
            }
        }
        if times.is_empty() {
            return Verdict::Fail(format!("no prediction steps recorded on {name}"));
        }
        env_means.push(times.iter().sum::<f64>() / times.len() as f64);
    }
    let mean = env_means.iter().sum::<f64>() / env_means.len() as f64;
    let var = env_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>()
        / (env_means.len() - 1) as f64;
    let cov = var.sqrt() / mean;

    let net_rows: Vec<&BenchRecord> = desk
        .records
        .iter()
        .filter(|r| r.planner == PlannerKind::OracleNet && r.success)
        .collect();
    let xs: Vec<f64> = net_rows.iter().map(|r| r.steps as f64).collect();
    let ys: Vec<f64> = net_rows.iter().map(|r| r.wall_time).collect();
    let (slope, r2) = ols_r2(&xs, &ys);

    let astar_rows: Vec<&BenchRecord> = desk
        .records
        .iter()
        .filter(|r| r.planner == PlannerKind::AStar && r.success)
        .collect();
    let pairs: Vec<(f64, f64)> = astar_rows
        .iter()
        .filter(|r| r.wall_time > 0.0)
        .filter_map(|r| r.path_length.map(|l| (l.ln(), r.wall_time.ln())))
        .collect();
    let lx: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ly: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (exponent, _) = ols_r2(&lx, &ly);

    if cov > STEP_COV_MAX {
        Verdict::Fail(format!(
            "per-step time CoV {cov:.3} across envs exceeds {STEP_COV_MAX}"
        ))
    } else if !(slope > 0.0 && r2 >= TIME_R2_MIN) {
        Verdict::Fail(format!(
            "time~steps fit slope {slope:.2e}, R2 {r2:.3} (need slope > 0, R2 >= {TIME_R2_MIN})"
        ))
    } else if exponent <= 1.0 {
        Verdict::Fail(format!(
            "A* log-log time~length exponent {exponent:.2} not super-linear"
        ))
    } else {
        Verdict::Pass(format!(
            "step CoV {cov:.3} <= {STEP_COV_MAX}, time~steps R2 {r2:.3} >= {TIME_R2_MIN}, A* exponent {exponent:.2} > 1"
        ))
    }
}

// --- 6: every Success path re-validates at half resolution -----------------

fn validity_contract(desk: Option<&Desk>) -> Verdict {
    let Some(desk) = desk else {
        return Verdict::Fail("desk fixture unavailable".into());
    };
    let res = desk.opts.check_resolution / 2.0;
    let mut validated = 0usize;
    for (r, &(s, g)) in desk.bi.iter().chain(&desk.uni).zip(desk.queries.iter().cycle()) {
        if r.status != RolloutStatus::Success {
            continue;
        }
        let start = desk.grid.node_config(s);
        let goal = desk.grid.node_config(g);
        if let Err(e) = validate_path(&desk.env, &r.path, &start, &goal, res) {
            return Verdict::Fail(format!("rollout path failed re-validation: {e}"));
        }
        validated += 1;
    }
    // the A* baseline paths the bench compared against, post-rewire
    let astar_res = desk.grid.min_spacing() / 4.0;
    for &(s, g) in &desk.queries {
        let Some(path) = desk.grid.astar(s, g).expect("free endpoints") else {
            continue;
        };
        let configs = desk.grid.path_configs(&path);
        let rewired = rewire(&desk.env, &configs, desk.grid.min_spacing() / 2.0);
        let start = desk.grid.node_config(s);
        let goal = desk.grid.node_config(g);
        if let Err(e) = validate_path(&desk.env, &rewired, &start, &goal, astar_res) {
            return Verdict::Fail(format!("rewired A* path failed re-validation: {e}"));
        }
        validated += 1;
    }
    Verdict::Pass(format!(
        "{validated} Success paths re-validated at half resolution"
    ))
}

// --- 7: rewire never lengthens, keeps endpoints, is idempotent -------------

fn random_valid_path(env: &Environment, rng: &mut ChaCha8Rng) -> Option<Vec<Config>> {
    let start = env.sample_free_capped(rng, 200).ok()?;
    let mut path = vec![start];
    let waypoints = rng.random_range(3..=8);
    'outer: while path.len() < waypoints {
        let head = path.last().expect("non-empty").clone();
        for _ in 0..40 {
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let len = rng.random_range(1.0..8.0);
            let cand = [
                head.coords()[0] + len * theta.cos(),
                head.coords()[1] + len * theta.sin(),
            ];
            let cand = match Config::new(cand.to_vec()) {
                Ok(c) => c,
                Err(_) => continue,
            };
            if env.is_free(&cand).ok()? && env.segment_free(&head, &cand, REWIRE_RES).ok()? {
                path.push(cand);
                continue 'outer;
            }
        }
        break;
    }
    (path.len() >= 2).then_some(path)
}

fn rewire_properties() -> Verdict {
    let envs = [
        Environment::bundled("simple1").expect("bundled env"),
        Environment::bundled("difficult3").expect("bundled env"),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0007);
    let mut checked = 0usize;
    while checked < REWIRE_PATHS {
        let env = &envs[checked % envs.len()];
        let Some(path) = random_valid_path(env, &mut rng) else {
            continue;
        };
        let out = rewire(env, &path, REWIRE_RES);
        if polyline_length(&out) > polyline_length(&path) + 1e-9 {
            return Verdict::Fail(format!("path {checked}: rewire increased length"));
        }
        if out.first() != path.first() || out.last() != path.last() {
            return Verdict::Fail(format!("path {checked}: endpoints not preserved"));
        }
        let again = rewire(env, &out, REWIRE_RES);
        if again != out {
            return Verdict::Fail(format!("path {checked}: rewire not idempotent"));
        }
        checked += 1;
    }
    Verdict::Pass(format!(
        "{REWIRE_PATHS} random valid paths: monotone length, exact endpoints, idempotent"
    ))
}

// --- 8: RRT* converges near-straight in an empty world ---------------------

fn rrt_star_sanity() -> Verdict {
    let env = Environment::gridworld2d([[0.0, 100.0], [0.0, 100.0]], vec![]).expect("valid bounds");
    let opts = RrtStarOptions {
        max_iterations: RRT_ITERATIONS,
        ..RrtStarOptions::for_env(&env, 20, RRT_SEED)
    };
    let (start, goal) = (cfg(&[5.0, 5.0]), cfg(&[95.0, 95.0]));
    let mut checkpoints: Vec<Option<f64>> = Vec::new();
    let result = rrt_star_observed(&env, &start, &goal, &opts, |it, best| {
        if it % RRT_CHECKPOINT_EVERY == 0 {
            checkpoints.push(best);
        }
    })
    .expect("free endpoints");
    if result.status != RolloutStatus::Success {
        return Verdict::Fail(format!("no solution after {RRT_ITERATIONS} iterations"));
    }

    let mut last: Option<f64> = None;
    for (i, c) in checkpoints.iter().enumerate() {
        if let (Some(prev), Some(now)) = (last, *c) {
            if now > prev + 1e-9 {
                return Verdict::Fail(format!(
                    "cost rose between checkpoints {i}: {prev:.3} -> {now:.3}"
                ));
            }
        }
        if c.is_some() {
            last = *c;
        }
    }

    let ratio = result.path_length() / euclidean(&start, &goal);
    if ratio >= RRT_OPT_SLACK {
        return Verdict::Fail(format!(
            "final cost ratio {ratio:.4} not within {RRT_OPT_SLACK} of straight line"
        ));
    }
    if let Err(e) = validate_path(&env, &result.path, &start, &goal, opts.check_resolution / 2.0) {
        return Verdict::Fail(format!("final path failed re-validation: {e}"));
    }
    Verdict::Pass(format!(
        "cost ratio {ratio:.4} < {RRT_OPT_SLACK}, non-increasing over {} checkpoints",
        checkpoints.len()
    ))
}

// --- 9: 3-link arm pipeline at full corpus scale (slow) --------------------

fn arm_suite() -> Verdict {
    if std::env::var("ORACLENET_ACCEPT_SLOW").as_deref() != Ok("1") {
        return Verdict::Skip("set ORACLENET_ACCEPT_SLOW=1 to run".into());
    }
    let obstacles = vec![
        Shape::Circle {
            center: [2.0, 1.2],
            radius: 0.45,
        },
        Shape::Circle {
            center: [-1.6, 1.6],
            radius: 0.4,
        },
        Shape::Circle {
            center: [0.8, -2.1],
            radius: 0.45,
        },
    ];
    let env = Environment::planar_arm(vec![1.0, 1.0, 1.0], obstacles).expect("valid links");
    let grid = match GridGraph::build(&env, ARM_K) {
        Ok(g) => g,
        Err(e) => return Verdict::Fail(format!("grid build: {e}")),
    };
    let gen = match generate_paths(&grid, ARM_PATHS, ARM_CORPUS_SEED, 1) {
        Ok(g) => g,
        Err(e) => return Verdict::Fail(format!("corpus: {e}")),
    };
    if gen.paths.len() < ARM_PATHS {
        return Verdict::Fail(format!("corpus short: {}/{ARM_PATHS} paths", gen.paths.len()));
    }
    let samples = split_paths(&gen.paths);
    let mut rng = ChaCha8Rng::seed_from_u64(DESK_TRAIN_SEED);
    let (train_samples, val_samples) = train_test_split(samples, 1.0 - DESK_VAL_FRAC, &mut rng);
    let mut net = LstmNet::new(
        env.dim(),
        &preset("ci").expect("ci preset"),
        env.bounds(),
        DESK_TRAIN_SEED,
    );
    let cfg = TrainConfig {
        epochs: ARM_EPOCHS,
        batch_size: DESK_BATCH,
        seed: DESK_TRAIN_SEED,
        ..TrainConfig::default()
    };
    if let Err(e) = train(&mut net, &train_samples, &val_samples, &cfg) {
        return Verdict::Fail(format!("training: {e}"));
    }

    let opts = RolloutOptions {
        bidirectional: true,
        ..RolloutOptions::for_env(&env, ARM_K)
    };
    let specs = [
        PlannerSpec::OracleNet {
            net: &net,
            options: opts.clone(),
        },
        PlannerSpec::AStar,
    ];
    let records = run_suite(&grid, "arm3", &specs, ARM_TRIALS, ARM_SUITE_SEED, 1);
    let report = summarize(&records);
    let on = report
        .planners
        .iter()
        .find(|p| p.planner == PlannerKind::OracleNet)
        .expect("oraclenet ran");
    let ratio = report
        .ratios
        .iter()
        .find(|r| r.numerator == PlannerKind::OracleNet && r.denominator == PlannerKind::AStar)
        .expect("paired ratio present");

    // the validity contract extends to this suite
    let queries = draw_queries(&grid, ARM_SUITE_SEED, ARM_TRIALS);
    for (i, &(s, g)) in queries.iter().enumerate() {
        let o = RolloutOptions {
            seed: 9000 + i as u64,
            ..opts.clone()
        };
        let r = rollout::plan(&net, &env, &grid.node_config(s), &grid.node_config(g), &o)
            .expect("queries drawn from the free set");
        if r.status != RolloutStatus::Success {
            continue;
        }
        let (start, goal) = (grid.node_config(s), grid.node_config(g));
        if let Err(e) =
            validate_path(&env, &r.path, &start, &goal, opts.check_resolution / 2.0)
        {
            return Verdict::Fail(format!("arm path failed re-validation: {e}"));
        }
    }

    if on.success_rate < ARM_SUCCESS_MIN {
        Verdict::Fail(format!(
            "success {}/{} = {:.3} below {ARM_SUCCESS_MIN}",
            on.successes, on.trials, on.success_rate
        ))
    } else if !(ARM_RATIO_LO..=ARM_RATIO_HI).contains(&ratio.mean) {
        Verdict::Fail(format!(
            "length ratio {:.4} outside [{ARM_RATIO_LO}, {ARM_RATIO_HI}]",
            ratio.mean
        ))
    } else {
        Verdict::Pass(format!(
            "success {}/{}, net/A* length ratio {:.4} in [{ARM_RATIO_LO}, {ARM_RATIO_HI}]",
            on.successes, on.trials, ratio.mean
        ))
    }
}

// --- 10: the CLI pipeline is byte-stable under identical seeds -------------

struct Stage {
    name: &'static str,
    args: Vec<String>,
    // artifacts relative to the per-run dir, with a timing mask where the
    // format includes wall-clock fields
    artifacts: Vec<(&'static str, MaskKind)>,
    allow_domain_exit: bool,
}

enum MaskKind {
    Exact,
    PathJson,
    RecordsCsv,
}

fn masked(bytes: &[u8], kind: &MaskKind) -> Vec<u8> {
    match kind {
        MaskKind::Exact => bytes.to_vec(),
        MaskKind::PathJson => {
            let mut v: serde_json::Value =
                serde_json::from_slice(bytes).expect("plan output parses");
            let obj = v.as_object_mut().expect("plan output is an object");
            obj.insert("wall_time_s".into(), serde_json::json!(0.0));
            obj.remove("first_solution_wall_time_s");
            serde_json::to_vec(&v).expect("serializable")
        }
        MaskKind::RecordsCsv => {
            let text = String::from_utf8(bytes.to_vec()).expect("records are utf-8");
            let mut out = String::new();
            for line in text.lines() {
                let cols: Vec<&str> = line.split(',').collect();
                for (i, c) in cols.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    if i == 4 && *c != "wall_time_s" {
                        out.push('-');
                    } else {
                        out.push_str(c);
                    }
                }
                out.push('\n');
            }
            out.into_bytes()
        }
    }
}

fn run_stage(bin: &str, dir: &std::path::Path, stage: &Stage) -> Result<(), String> {
    let output = std::process::Command::new(bin)
        .current_dir(dir)
        .env_remove("ORACLENET_SEED")
        .args(&stage.args)
        .output()
        .map_err(|e| format!("{}: spawn failed: {e}", stage.name))?;
    let code = output.status.code().unwrap_or(-1);
    let ok = code == 0 || (stage.allow_domain_exit && code == 3);
    if !ok {
        return Err(format!(
            "{}: exit {code}: {}",
            stage.name,
            String::from_utf8_lossy(&output.stderr)
        ));
    }
    Ok(())
}

fn artifact_determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_oraclenet");
    let work = tempfile::tempdir().expect("tempdir");
    let dirs = [work.path().join("a"), work.path().join("b")];
    for d in &dirs {
        std::fs::create_dir(d).expect("run dir");
    }

    // two nearby free nodes make the plan stage deterministic yet non-trivial
    let env = Environment::bundled("simple2").expect("bundled env");
    let grid = GridGraph::build(&env, 20).expect("desk grid");
    let free = grid.free_nodes();
    let s = grid.node_config(free[0]);
    let g = grid.node_config(free[1]);
    let fmt_cfg = |c: &Config| {
        c.coords()
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };

    let stages = vec![
        Stage {
            name: "dataset",
            args: vec![
                "dataset".into(),
                "simple2".into(),
                "--k".into(),
                "20".into(),
                "--n-paths".into(),
                "30".into(),
                "--seed".into(),
                "5".into(),
                "--out".into(),
                "corpus.onds".into(),
            ],
            artifacts: vec![
                ("corpus.onds", MaskKind::Exact),
                ("corpus.onds.json", MaskKind::Exact),
            ],
            allow_domain_exit: false,
        },
        Stage {
            name: "train",
            args: vec![
                "train".into(),
                "corpus.onds".into(),
                "--layers".into(),
                "16".into(),
                "--epochs".into(),
                "2".into(),
                "--batch-size".into(),
                "8".into(),
                "--seed".into(),
                "3".into(),
                "--out".into(),
                "net.onwt".into(),
            ],
            artifacts: vec![
                ("net.onwt", MaskKind::Exact),
                ("net.onwt.loss.csv", MaskKind::Exact),
            ],
            allow_domain_exit: false,
        },
        Stage {
            name: "plan",
            args: vec![
                "plan".into(),
                "net.onwt".into(),
                "simple2".into(),
                "--start".into(),
                fmt_cfg(&s),
                "--goal".into(),
                fmt_cfg(&g),
                "--bidirectional".into(),
                "--k".into(),
                "20".into(),
                "--seed".into(),
                "2".into(),
                "--out".into(),
                "path.json".into(),
                "--svg".into(),
                "path.svg".into(),
            ],
            artifacts: vec![
                ("path.json", MaskKind::PathJson),
                ("path.svg", MaskKind::Exact),
            ],
            allow_domain_exit: true,
        },
        Stage {
            name: "bench",
            args: vec![
                "bench".into(),
                "simple2".into(),
                "--planners".into(),
                "astar,rrtstar".into(),
                "--k".into(),
                "20".into(),
                "--n-trials".into(),
                "5".into(),
                "--rrt-iterations".into(),
                "400".into(),
                "--seed".into(),
                "6".into(),
                "--out-dir".into(),
                "bench".into(),
            ],
            artifacts: vec![("bench/records.csv", MaskKind::RecordsCsv)],
            allow_domain_exit: false,
        },
        Stage {
            name: "plot",
            args: vec![
                "plot".into(),
                "simple2".into(),
                "--dataset".into(),
                "corpus.onds".into(),
                "--max-paths".into(),
                "6".into(),
                "--out".into(),
                "corpus.svg".into(),
            ],
            artifacts: vec![("corpus.svg", MaskKind::Exact)],
            allow_domain_exit: false,
        },
    ];

    let mut compared = 0usize;
    for stage in &stages {
        for dir in &dirs {
            if let Err(e) = run_stage(bin, dir, stage) {
                return Verdict::Fail(e);
            }
        }
        for (rel, mask) in &stage.artifacts {
            let read = |d: &std::path::Path| {
                std::fs::read(d.join(rel)).map_err(|e| format!("{}: {rel}: {e}", stage.name))
            };
            let (a, b) = match (read(&dirs[0]), read(&dirs[1])) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => return Verdict::Fail(e),
            };
            if masked(&a, mask) != masked(&b, mask) {
                return Verdict::Fail(format!(
                    "{}: {rel} differs between identical runs",
                    stage.name
                ));
            }
            compared += 1;
        }
        // timing-bearing bench outputs only need to exist
        if stage.name == "bench" {
            for rel in ["bench/summary.md", "bench/histogram.csv", "bench/scatter.csv"] {
                for dir in &dirs {
                    if !dir.join(rel).exists() {
                        return Verdict::Fail(format!("bench: {rel} missing"));
                    }
                }
            }
        }
    }
    Verdict::Pass(format!(
        "{} stages re-run, {compared} artifacts byte-stable (timing fields masked)",
        stages.len()
    ))
}
