//! Command line for the oraclenet toolkit: oracle corpus generation, network
//! training, single-query planning, planner benchmarks, and SVG plots.
//!
//! Exit codes: 0 on success, 2 on usage errors (bad flags, malformed input
//! files), 3 on domain failures (infeasible queries, empty free space, plans
//! that do not reach the goal).

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use oraclenet::bench::{self, PlannerKind, PlannerSpec};
use oraclenet::dataset::{self, DatasetMeta};
use oraclenet::env::{Config, Environment};
use oraclenet::manifest::RunManifest;
use oraclenet::network::io::{load_weights, save_weights};
use oraclenet::network::train::{train, TrainConfig};
use oraclenet::network::{preset, preset_names, LstmNet};
use oraclenet::rollout::{self, PathFile, RolloutOptions, RolloutStatus};
use oraclenet::rrt_star::RrtStarOptions;
use oraclenet::search::GridGraph;
use oraclenet::svg;

#[derive(Parser)]
#[command(name = "oraclenet", version, about = "Oracle-imitating neural motion planner")]
struct Cli {
    /// Worker threads for parallel stages (dataset generation, bench).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an oracle path corpus on a c-space grid.
    Dataset(DatasetArgs),
    /// Train a next-waypoint network on a corpus.
    Train(TrainArgs),
    /// Plan one query with a trained network.
    Plan(PlanArgs),
    /// Run planners on shared queries and summarize the results.
    Bench(BenchArgs),
    /// Render an environment with a path or corpus overlay to SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct DatasetArgs {
    /// Environment: bundled name (see --help) or spec file path.
    env: String,
    /// Grid nodes per axis (at least 2).
    #[arg(long, default_value_t = 100)]
    k: usize,
    /// Number of oracle paths to generate.
    #[arg(long, default_value_t = 1000)]
    n_paths: usize,
    /// Seed; falls back to ORACLENET_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Corpus produced by `dataset` (sidecar metadata required).
    dataset: PathBuf,
    /// Architecture preset: ci, 2d-paper, 3link-paper, manipulator-paper.
    #[arg(long, conflicts_with = "layers")]
    preset: Option<String>,
    /// Explicit hidden sizes, comma separated (e.g. 256,256).
    #[arg(long)]
    layers: Option<String>,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Fraction of paths held out for validation (0 disables).
    #[arg(long, default_value_t = 0.1)]
    val_frac: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Weights file to write; the loss curve lands next to it.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct PlanArgs {
    /// Trained weights file.
    weights: PathBuf,
    /// Environment: bundled name or spec file path.
    env: String,
    /// Start configuration, comma separated.
    #[arg(long)]
    start: String,
    /// Goal configuration, comma separated.
    #[arg(long)]
    goal: String,
    /// Grow branches from both endpoints instead of start only.
    #[arg(long)]
    bidirectional: bool,
    /// Grid density the default thresholds derive from.
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long)]
    goal_threshold: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    meet_threshold: Option<f64>,
    #[arg(long)]
    check_resolution: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    repair_max_tries: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Path JSON to write.
    #[arg(long, short)]
    out: PathBuf,
    /// Also render the result to this SVG file.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Environment: bundled name or spec file path.
    env: String,
    /// Comma-separated planners: oraclenet, astar, rrtstar.
    #[arg(long, default_value = "oraclenet,astar")]
    planners: String,
    /// Weights file; required when oraclenet is listed.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Grid nodes per axis for queries, A*, and derived thresholds.
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long, default_value_t = 100)]
    n_trials: usize,
    /// Iteration budget for the rrtstar planner.
    #[arg(long, default_value_t = 5000)]
    rrt_iterations: usize,
    /// Run the oraclenet planner bidirectionally.
    #[arg(long)]
    bidirectional: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for records.csv, summary.md, histogram.csv, scatter.csv.
    #[arg(long, short)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Environment: bundled name or spec file path.
    env: String,
    /// Path-result JSON produced by `plan`.
    #[arg(long, conflicts_with = "dataset")]
    path: Option<PathBuf>,
    /// Corpus file produced by `dataset`.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Cap on the number of corpus paths drawn.
    #[arg(long, default_value_t = 50)]
    max_paths: usize,
    /// SVG file to write.
    #[arg(long, short)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Domain(String),
}

fn usage(msg: impl Display) -> Failure {
    Failure::Usage(msg.to_string())
}

fn domain(msg: impl Display) -> Failure {
    Failure::Domain(msg.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let jobs = cli.jobs.max(1);
    let result = match cli.command {
        Cmd::Dataset(args) => cmd_dataset(args, jobs),
        Cmd::Train(args) => cmd_train(args),
        Cmd::Plan(args) => cmd_plan(args),
        Cmd::Bench(args) => cmd_bench(args, jobs),
        Cmd::Plot(args) => cmd_plot(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

/// Bundled name or a spec file on disk.
fn load_env(arg: &str) -> Result<Environment, Failure> {
    let path = Path::new(arg);
    if path.exists() {
        return Environment::load(path).map_err(|e| usage(format!("env file {arg}: {e}")));
    }
    if Environment::bundled_names().contains(&arg) {
        return Environment::bundled(arg).map_err(|e| usage(format!("bundled env {arg}: {e}")));
    }
    Err(usage(format!(
        "'{arg}' is neither a file nor a bundled env (bundled: {})",
        Environment::bundled_names().join(", ")
    )))
}

/// Short identifier for records and manifests: bundled name or file stem.
fn env_id_of(arg: &str) -> String {
    let path = Path::new(arg);
    if path.exists() {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| arg.to_string())
    } else {
        arg.to_string()
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("ORACLENET_SEED") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| usage(format!("ORACLENET_SEED is not a u64: '{v}'"))),
        Err(_) => Ok(0),
    }
}

fn parse_config(label: &str, s: &str, dim: usize) -> Result<Config, Failure> {
    let coords: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let coords = coords.map_err(|_| usage(format!("{label} '{s}' is not a comma-separated list of numbers")))?;
    if coords.len() != dim {
        return Err(usage(format!(
            "{label} has {} coordinates, environment has dimension {dim}",
            coords.len()
        )));
    }
    Config::new(coords).map_err(|e| usage(format!("{label}: {e}")))
}

fn build_grid(env: &Environment, k: usize) -> Result<GridGraph, Failure> {
    if k < 2 {
        return Err(usage("k must be at least 2 (one node per axis end)"));
    }
    GridGraph::build(env, k).map_err(|e| domain(format!("grid construction failed: {e}")))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| usage(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn write_manifest(m: &RunManifest, artifact: &Path) -> Result<(), Failure> {
    m.write_next_to(artifact)
        .map_err(|e| usage(format!("cannot write manifest for {}: {e}", artifact.display())))?;
    Ok(())
}

fn cmd_dataset(args: DatasetArgs, jobs: usize) -> Result<(), Failure> {
    let seed = resolve_seed(args.seed)?;
    if args.n_paths == 0 {
        return Err(usage("--n-paths must be positive"));
    }
    let env = load_env(&args.env)?;
    let grid = build_grid(&env, args.k)?;
    let generated = dataset::generate_paths(&grid, args.n_paths, seed, jobs)
        .map_err(|e| domain(format!("generation failed: {e}")))?;
    if generated.paths.is_empty() {
        return Err(domain("no oracle paths could be generated in this environment"));
    }
    let meta = DatasetMeta::new(&env, args.k, seed, &generated);
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| usage(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    dataset::save_dataset(&args.out, env.dim(), &generated.paths, &meta)
        .map_err(|e| usage(format!("cannot write {}: {e}", args.out.display())))?;
    let manifest = RunManifest::new(
        "dataset",
        Some(env.spec_hash()),
        seed,
        jobs,
        serde_json::json!({
            "env": args.env,
            "env_id": env_id_of(&args.env),
            "k": args.k,
            "n_paths": args.n_paths,
            "out": args.out.display().to_string(),
        }),
    );
    write_manifest(&manifest, &args.out)?;
    println!(
        "wrote {} paths to {} ({} queries redrawn)",
        generated.paths.len(),
        args.out.display(),
        generated.skipped_queries
    );
    if (generated.paths.len() as u64) < args.n_paths as u64 {
        log::warn!(
            "generated only {} of {} requested paths",
            generated.paths.len(),
            args.n_paths
        );
    }
    Ok(())
}

fn parse_layers(args: &TrainArgs) -> Result<Vec<usize>, Failure> {
    if let Some(spec) = &args.layers {
        let sizes: Result<Vec<usize>, _> =
            spec.split(',').map(|t| t.trim().parse::<usize>()).collect();
        let sizes = sizes.map_err(|_| usage(format!("--layers '{spec}' is not a comma-separated list of sizes")))?;
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(usage("--layers needs at least one nonzero size"));
        }
        return Ok(sizes);
    }
    let name = args.preset.as_deref().unwrap_or("ci");
    preset(name).ok_or_else(|| {
        usage(format!(
            "unknown preset '{name}' (available: {})",
            preset_names().join(", ")
        ))
    })
}

fn cmd_train(args: TrainArgs) -> Result<(), Failure> {
    let seed = resolve_seed(args.seed)?;
    if !(0.0..1.0).contains(&args.val_frac) {
        return Err(usage("--val-frac must lie in [0, 1)"));
    }
    if args.batch_size == 0 {
        return Err(usage("--batch-size must be positive"));
    }
    let hidden = parse_layers(&args)?;
    let (paths, meta) = dataset::load_dataset(&args.dataset)
        .map_err(|e| usage(format!("dataset {}: {e}", args.dataset.display())))?;
    let meta = meta.ok_or_else(|| {
        usage(format!(
            "dataset {} has no sidecar metadata; training needs the environment bounds",
            args.dataset.display()
        ))
    })?;
    let env = meta
        .environment()
        .map_err(|e| usage(format!("dataset sidecar: {e}")))?;
    let samples = dataset::split_paths(&paths);
    let (train_samples, val_samples) = if args.val_frac > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        dataset::train_test_split(samples, 1.0 - args.val_frac, &mut rng)
    } else {
        (samples, Vec::new())
    };
    let mut net = LstmNet::new(env.dim(), &hidden, env.bounds(), seed);
    let cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed,
        ..TrainConfig::default()
    };
    let stats = train(&mut net, &train_samples, &val_samples, &cfg)
        .map_err(|e| domain(format!("training failed: {e}")))?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| usage(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    save_weights(&net, &args.out)
        .map_err(|e| usage(format!("cannot write {}: {e}", args.out.display())))?;
    let mut loss_csv = String::from("epoch,train_mse,val_mse\n");
    for s in &stats {
        loss_csv.push_str(&format!(
            "{},{},{}\n",
            s.epoch,
            s.train_mse,
            s.val_mse.map(|v| v.to_string()).unwrap_or_default()
        ));
    }
    let loss_path = loss_curve_path(&args.out);
    write_file(&loss_path, &loss_csv)?;
    let manifest = RunManifest::new(
        "train",
        Some(meta.env_hash.clone()),
        seed,
        1,
        serde_json::json!({
            "dataset": args.dataset.display().to_string(),
            "hidden_layers": hidden,
            "epochs": args.epochs,
            "batch_size": args.batch_size,
            "val_frac": args.val_frac,
            "out": args.out.display().to_string(),
        }),
    );
    write_manifest(&manifest, &args.out)?;
    let final_mse = stats.last().map(|s| s.train_mse);
    println!(
        "trained {} epochs on {} sequences; weights at {}{}",
        stats.len(),
        paths.len(),
        args.out.display(),
        final_mse
            .map(|m| format!(" (final train mse {m:.6})"))
            .unwrap_or_default()
    );
    Ok(())
}

fn loss_curve_path(weights: &Path) -> PathBuf {
    let mut name = weights
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".loss.csv");
    weights.with_file_name(name)
}

fn cmd_plan(args: PlanArgs) -> Result<(), Failure> {
    let seed = resolve_seed(args.seed)?;
    let env = load_env(&args.env)?;
    let net = load_weights(&args.weights)
        .map_err(|e| usage(format!("weights {}: {e}", args.weights.display())))?;
    if net.dim() != env.dim() {
        return Err(usage(format!(
            "weights dimension {} does not match environment dimension {}",
            net.dim(),
            env.dim()
        )));
    }
    let start = parse_config("start", &args.start, env.dim())?;
    let goal = parse_config("goal", &args.goal, env.dim())?;
    if args.k < 2 {
        return Err(usage("k must be at least 2"));
    }
    let mut opts = RolloutOptions::for_env(&env, args.k);
    opts.bidirectional = args.bidirectional;
    opts.seed = seed;
    if let Some(v) = args.goal_threshold {
        opts.goal_threshold = v;
    }
    if let Some(v) = args.epsilon {
        opts.epsilon = v;
    }
    if let Some(v) = args.meet_threshold {
        opts.meet_threshold = v;
    }
    if let Some(v) = args.check_resolution {
        opts.check_resolution = v;
    }
    if let Some(v) = args.max_steps {
        opts.max_steps = v;
    }
    if let Some(v) = args.repair_max_tries {
        opts.repair_max_tries = v;
    }
    if opts.goal_threshold <= 0.0 || opts.epsilon <= 0.0 || opts.check_resolution <= 0.0 {
        return Err(usage("thresholds must be positive"));
    }
    let result = rollout::plan(&net, &env, &start, &goal, &opts)
        .map_err(|e| domain(format!("planning failed: {e}")))?;
    let file = result.to_path_file(&env.spec_hash());
    let body = serde_json::to_string_pretty(&file).expect("path file serializes");
    write_file(&args.out, &(body + "\n"))?;
    let manifest = RunManifest::new(
        "plan",
        Some(env.spec_hash()),
        seed,
        1,
        serde_json::json!({
            "weights": args.weights.display().to_string(),
            "env": args.env,
            "start": args.start,
            "goal": args.goal,
            "bidirectional": args.bidirectional,
            "k": args.k,
            "goal_threshold": opts.goal_threshold,
            "epsilon": opts.epsilon,
            "meet_threshold": opts.meet_threshold,
            "check_resolution": opts.check_resolution,
            "max_steps": opts.max_steps,
            "repair_max_tries": opts.repair_max_tries,
            "out": args.out.display().to_string(),
        }),
    );
    write_manifest(&manifest, &args.out)?;
    if let Some(svg_path) = &args.svg {
        let drawing = svg::render(&env, &[result.path.clone()])
            .map_err(|e| usage(format!("render failed: {e}")))?;
        write_file(svg_path, &drawing)?;
        write_manifest(&manifest, svg_path)?;
    }
    match result.status {
        RolloutStatus::Success => {
            println!(
                "success: {} waypoints, length {:.4}, {} steps, {} repairs",
                result.path.len(),
                result.path_length(),
                result.steps_taken,
                result.repairs_invoked
            );
            Ok(())
        }
        status => Err(domain(format!(
            "plan ended with status {:?} after {} steps (result written to {})",
            status,
            result.steps_taken,
            args.out.display()
        ))),
    }
}

fn cmd_bench(args: BenchArgs, jobs: usize) -> Result<(), Failure> {
    let seed = resolve_seed(args.seed)?;
    if args.n_trials == 0 {
        return Err(usage("--n-trials must be positive"));
    }
    let mut kinds: Vec<PlannerKind> = Vec::new();
    for tok in args.planners.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let kind: PlannerKind = tok.parse().map_err(usage)?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.is_empty() {
        return Err(usage("--planners must name at least one planner"));
    }
    let env = load_env(&args.env)?;
    let grid = build_grid(&env, args.k)?;
    let net = if kinds.contains(&PlannerKind::OracleNet) {
        let weights = args
            .weights
            .as_ref()
            .ok_or_else(|| usage("--weights is required when oraclenet is benchmarked"))?;
        let net = load_weights(weights)
            .map_err(|e| usage(format!("weights {}: {e}", weights.display())))?;
        if net.dim() != env.dim() {
            return Err(usage(format!(
                "weights dimension {} does not match environment dimension {}",
                net.dim(),
                env.dim()
            )));
        }
        Some(net)
    } else {
        None
    };
    let specs: Vec<PlannerSpec> = kinds
        .iter()
        .map(|kind| match kind {
            PlannerKind::OracleNet => {
                let mut options = RolloutOptions::for_env(&env, args.k);
                options.bidirectional = args.bidirectional;
                options.seed = seed;
                PlannerSpec::OracleNet {
                    net: net.as_ref().expect("checked above"),
                    options,
                }
            }
            PlannerKind::AStar => PlannerSpec::AStar,
            PlannerKind::RrtStar => {
                let mut options = RrtStarOptions::for_env(&env, args.k, seed);
                options.max_iterations = args.rrt_iterations;
                PlannerSpec::RrtStar { options }
            }
        })
        .collect();
    let env_id = env_id_of(&args.env);
    let records = bench::run_suite(&grid, &env_id, &specs, args.n_trials, seed, jobs);
    let report = bench::summarize(&records);
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| usage(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let records_path = args.out_dir.join("records.csv");
    write_file(&records_path, &bench::records_to_csv(&records))?;
    write_file(&args.out_dir.join("summary.md"), &bench::report_to_markdown(&report))?;
    write_file(&args.out_dir.join("histogram.csv"), &bench::histogram_csv(&report))?;
    write_file(&args.out_dir.join("scatter.csv"), &bench::scatter_csv(&report))?;
    let manifest = RunManifest::new(
        "bench",
        Some(env.spec_hash()),
        seed,
        jobs,
        serde_json::json!({
            "env": args.env,
            "env_id": env_id,
            "planners": kinds.iter().map(|k| k.label()).collect::<Vec<_>>(),
            "weights": args.weights.as_ref().map(|w| w.display().to_string()),
            "k": args.k,
            "n_trials": args.n_trials,
            "rrt_iterations": args.rrt_iterations,
            "bidirectional": args.bidirectional,
            "out_dir": args.out_dir.display().to_string(),
        }),
    );
    write_manifest(&manifest, &records_path)?;
    print!("{}", bench::report_to_markdown(&report));
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<(), Failure> {
    let env = load_env(&args.env)?;
    let paths: Vec<Vec<Config>> = match (&args.path, &args.dataset) {
        (Some(path_file), None) => {
            let text = std::fs::read_to_string(path_file)
                .map_err(|e| usage(format!("cannot read {}: {e}", path_file.display())))?;
            let parsed: PathFile = serde_json::from_str(&text)
                .map_err(|e| usage(format!("{} is not a path file: {e}", path_file.display())))?;
            if parsed.env_hash != env.spec_hash() {
                log::warn!(
                    "path file was planned against env {} but plotting on {}",
                    parsed.env_hash,
                    env.spec_hash()
                );
            }
            let waypoints: Result<Vec<Config>, _> =
                parsed.waypoints.into_iter().map(Config::new).collect();
            vec![waypoints.map_err(|e| usage(format!("path file waypoints: {e}")))?]
        }
        (None, Some(corpus)) => {
            let (paths, _) = dataset::load_dataset(corpus)
                .map_err(|e| usage(format!("dataset {}: {e}", corpus.display())))?;
            paths
                .into_iter()
                .take(args.max_paths)
                .map(|p| p.waypoints)
                .collect()
        }
        _ => {
            return Err(usage("pass exactly one of --path or --dataset"));
        }
    };
    let drawing = svg::render(&env, &paths).map_err(|e| usage(format!("render failed: {e}")))?;
    write_file(&args.out, &drawing)?;
    let manifest = RunManifest::new(
        "plot",
        Some(env.spec_hash()),
        0,
        1,
        serde_json::json!({
            "env": args.env,
            "path": args.path.as_ref().map(|p| p.display().to_string()),
            "dataset": args.dataset.as_ref().map(|p| p.display().to_string()),
            "max_paths": args.max_paths,
            "out": args.out.display().to_string(),
        }),
    );
    write_manifest(&manifest, &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}
