//! End-to-end pipeline: oracle corpus, training convergence, rollout.

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use oraclenet::dataset;
use oraclenet::env::Environment;
use oraclenet::network::train::{train, TrainConfig};
use oraclenet::network::LstmNet;
use oraclenet::rollout::{self, RolloutOptions, RolloutStatus};
use oraclenet::search::GridGraph;

#[test]
fn loss_collapses_on_an_open_world_corpus() {
    let env = Environment::gridworld2d([[0.0, 100.0], [0.0, 100.0]], vec![]).unwrap();
    let grid = GridGraph::build(&env, 10).unwrap();
    let generated = dataset::generate_paths(&grid, 50, 3, 1).unwrap();
    assert_eq!(generated.paths.len(), 50);

    let samples = dataset::split_paths(&generated.paths);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (train_set, val_set) = dataset::train_test_split(samples, 0.9, &mut rng);

    let mut net = LstmNet::new(2, &[48, 48], env.bounds(), 9);
    let cfg = TrainConfig {
        epochs: 150,
        batch_size: 16,
        seed: 9,
        ..TrainConfig::default()
    };
    let stats = train(&mut net, &train_set, &val_set, &cfg).unwrap();
    assert_eq!(stats.len(), 150);
    let first = stats.first().unwrap();
    let last = stats.last().unwrap();
    assert!(
        last.train_mse < 0.1 * first.train_mse,
        "train mse {} -> {} did not drop below 10%",
        first.train_mse,
        last.train_mse
    );
    // Held-out paths from the same distribution must improve too.
    let first_val = first.val_mse.unwrap();
    let last_val = last.val_mse.unwrap();
    assert!(
        last_val < 0.5 * first_val,
        "val mse {first_val} -> {last_val} barely moved"
    );

    // The imitator should now solve fresh queries in its training world.
    let opts = RolloutOptions::for_env(&env, 10);
    let free = grid.free_nodes();
    let mut solved = 0;
    let queries = [(3usize, 88usize), (90, 9), (11, 77)];
    for &(a, b) in &queries {
        let start = grid.node_config(free[a % free.len()]);
        let goal = grid.node_config(free[b % free.len()]);
        let res = rollout::rollout(&net, &env, &start, &goal, &opts).unwrap();
        if res.status == RolloutStatus::Success {
            rollout::validate_path(&env, &res.path, &start, &goal, opts.check_resolution)
                .unwrap();
            solved += 1;
        }
    }
    assert!(solved >= 2, "only {solved}/3 rollout queries succeeded");
}

#[test]
fn corpus_paths_live_on_the_lattice_and_reach_their_goals() {
    let env = Environment::bundled("simple2").unwrap();
    let grid = GridGraph::build(&env, 25).unwrap();
    let generated = dataset::generate_paths(&grid, 40, 5, 2).unwrap();
    for p in &generated.paths {
        assert!(p.waypoints.len() >= 2);
        for w in &p.waypoints {
            let n = grid.nearest_node(w);
            let snapped = grid.node_config(n);
            for (a, b) in w.coords().iter().zip(snapped.coords()) {
                assert!(
                    (a - b).abs() < 1e-9,
                    "corpus waypoint {w:?} is off-lattice"
                );
            }
        }
        let onds_cost = oraclenet::env::polyline_length(&p.waypoints);
        let optimal = common::dijkstra(
            &grid,
            grid.nearest_node(p.start()),
            grid.nearest_node(p.goal()),
        )
        .expect("corpus endpoints are connected");
        assert!(
            (onds_cost - optimal).abs() < 1e-6,
            "corpus path is not lattice-optimal: {onds_cost} vs {optimal}"
        );
    }
}
