//! Oracle corpus generation and on-disk format: A* paths between random
//! free-node pairs, goal-augmented next-step samples, and the "ONDS" binary
//! dataset file with its JSON sidecar.

use crate::env::{Config, Environment};
use crate::search::{GridGraph, SearchError};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const DATASET_MAGIC: &[u8; 4] = b"ONDS";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("grid has fewer than two free nodes")]
    InsufficientFreeNodes,
    #[error("bad magic: expected \"ONDS\"")]
    BadMagic,
    #[error("unsupported dataset version {0}")]
    BadVersion(u32),
    #[error("malformed dataset: {0}")]
    Malformed(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathSource {
    AStar,
}

/// An expert demonstration: a collision-validated waypoint sequence from a
/// start to a goal.
#[derive(Debug, Clone, PartialEq)]
pub struct OraclePath {
    pub waypoints: Vec<Config>,
    pub source: PathSource,
}

impl OraclePath {
    /// Drops exact consecutive duplicates; the result must still have at
    /// least two waypoints.
    pub fn from_waypoints(waypoints: Vec<Config>, source: PathSource) -> Result<Self, DatasetError> {
        let mut out: Vec<Config> = Vec::with_capacity(waypoints.len());
        for w in waypoints {
            if out.last().map(|p| p.coords() == w.coords()) != Some(true) {
                out.push(w);
            }
        }
        if out.len() < 2 {
            return Err(DatasetError::Malformed(
                "path has fewer than two distinct waypoints".into(),
            ));
        }
        Ok(OraclePath {
            waypoints: out,
            source,
        })
    }

    pub fn start(&self) -> &Config {
        &self.waypoints[0]
    }

    pub fn goal(&self) -> &Config {
        self.waypoints.last().unwrap()
    }

    pub fn length(&self) -> f64 {
        crate::env::polyline_length(&self.waypoints)
    }
}

/// One supervised step: predict the next waypoint from the current one and
/// the goal.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    /// `[x(t), x(tau)]`, length 2d, raw c-space units.
    pub input: Vec<f64>,
    pub target: Config,
    pub path_id: usize,
    pub step_index: usize,
}

#[derive(Debug, Clone)]
pub struct GeneratedPaths {
    pub paths: Vec<OraclePath>,
    /// Queries whose sampled pair had no path and were redrawn.
    pub skipped_queries: u64,
    pub total_queries: u64,
}

/// SplitMix64-style mixer used to derive independent per-query seeds from
/// the master seed, keeping results identical regardless of worker count.
pub(crate) fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn one_query(g: &GridGraph, master_seed: u64, query_index: u64) -> Option<OraclePath> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, query_index));
    let free = g.free_nodes();
    let start = free[rng.random_range(0..free.len())];
    let goal = loop {
        let n = free[rng.random_range(0..free.len())];
        if n != start {
            break n;
        }
    };
    let path = g.astar(start, goal).expect("endpoints drawn from free set")?;
    let configs = g.path_configs(&path);
    Some(OraclePath::from_waypoints(configs, PathSource::AStar).expect("A* path has >= 2 nodes"))
}

/// Draws uniform free-node pairs (start != goal per pair) and collects their
/// A* paths until `n_paths` are found or the redraw budget runs out; in the
/// latter case a partial corpus is returned with a warning. Queries run in
/// parallel waves, each seeded from (master_seed, query_index), and are
/// aggregated in query-index order, so the corpus is bit-identical for any
/// `jobs`.
pub fn generate_paths(
    g: &GridGraph,
    n_paths: usize,
    master_seed: u64,
    jobs: usize,
) -> Result<GeneratedPaths, DatasetError> {
    if g.free_nodes().len() < 2 {
        return Err(DatasetError::InsufficientFreeNodes);
    }
    let budget = n_paths.saturating_mul(10).saturating_add(1000) as u64;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");

    let mut paths = Vec::with_capacity(n_paths);
    let mut skipped = 0u64;
    let mut next_query = 0u64;
    while paths.len() < n_paths && next_query < budget {
        let wave = ((n_paths - paths.len()) as u64).min(budget - next_query);
        let indices: Vec<u64> = (next_query..next_query + wave).collect();
        let results: Vec<Option<OraclePath>> = pool.install(|| {
            indices
                .par_iter()
                .map(|&qi| one_query(g, master_seed, qi))
                .collect()
        });
        for r in results {
            match r {
                Some(p) => paths.push(p),
                None => skipped += 1,
            }
        }
        next_query += wave;
    }
    if paths.len() < n_paths {
        log::warn!(
            "redraw budget of {budget} queries exhausted: {}/{} paths generated",
            paths.len(),
            n_paths
        );
    }
    Ok(GeneratedPaths {
        paths,
        skipped_queries: skipped,
        total_queries: next_query,
    })
}

/// A path of length tau+1 yields tau samples: ([x(t), x(tau)] -> x(t+1)).
pub fn split_paths(paths: &[OraclePath]) -> Vec<TrainingSample> {
    let mut out = Vec::new();
    for (path_id, p) in paths.iter().enumerate() {
        let goal = p.goal().coords().to_vec();
        for t in 0..p.waypoints.len() - 1 {
            let mut input = p.waypoints[t].coords().to_vec();
            input.extend_from_slice(&goal);
            out.push(TrainingSample {
                input,
                target: p.waypoints[t + 1].clone(),
                path_id,
                step_index: t,
            });
        }
    }
    out
}

/// Splits samples into train/test at path granularity so no path contributes
/// to both sides. The train side receives round(train_fraction * n_paths)
/// paths, at least one.
pub fn train_test_split<R: Rng>(
    samples: Vec<TrainingSample>,
    train_fraction: f64,
    rng: &mut R,
) -> (Vec<TrainingSample>, Vec<TrainingSample>) {
    assert!(
        train_fraction > 0.0 && train_fraction < 1.0,
        "train_fraction must lie in (0, 1)"
    );
    let mut ids: Vec<usize> = Vec::new();
    for s in &samples {
        if ids.last() != Some(&s.path_id) && !ids.contains(&s.path_id) {
            ids.push(s.path_id);
        }
    }
    use rand::seq::SliceRandom;
    ids.shuffle(rng);
    let n_train = ((train_fraction * ids.len() as f64).round() as usize).clamp(1, ids.len());
    if n_train == ids.len() {
        log::warn!("test split is empty: all {} paths fall on the train side", ids.len());
    }
    let train_ids: std::collections::HashSet<usize> = ids[..n_train].iter().copied().collect();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for s in samples {
        if train_ids.contains(&s.path_id) {
            train.push(s);
        } else {
            test.push(s);
        }
    }
    (train, test)
}

/// Sidecar metadata stored as pretty JSON next to the binary dataset.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetMeta {
    pub env_hash: String,
    /// Full environment spec so downstream consumers (training needs the
    /// bounds for normalization) can reconstruct it without the original
    /// file.
    pub env_spec: serde_json::Value,
    pub nodes_per_axis: usize,
    pub seed: u64,
    pub path_count: u64,
    pub skipped_queries: u64,
    pub generator_version: String,
}

impl DatasetMeta {
    pub fn new(env: &Environment, k: usize, seed: u64, gen: &GeneratedPaths) -> Self {
        DatasetMeta {
            env_hash: env.spec_hash(),
            env_spec: serde_json::from_str(&env.to_json_string()).expect("env spec is valid JSON"),
            nodes_per_axis: k,
            seed,
            path_count: gen.paths.len() as u64,
            skipped_queries: gen.skipped_queries,
            generator_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn environment(&self) -> Result<Environment, DatasetError> {
        Ok(Environment::from_json_str(&self.env_spec.to_string())
            .map_err(|e| DatasetError::Malformed(format!("sidecar env spec: {e}")))?)
    }
}

pub fn sidecar_path(dataset_path: &Path) -> std::path::PathBuf {
    let mut s = dataset_path.as_os_str().to_owned();
    s.push(".json");
    std::path::PathBuf::from(s)
}

pub fn save_dataset(
    path: &Path,
    dim: usize,
    paths: &[OraclePath],
    meta: &DatasetMeta,
) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(DATASET_MAGIC)?;
    w.write_u32::<LittleEndian>(DATASET_VERSION)?;
    w.write_u32::<LittleEndian>(dim as u32)?;
    w.write_u64::<LittleEndian>(paths.len() as u64)?;
    for p in paths {
        w.write_u32::<LittleEndian>(p.waypoints.len() as u32)?;
        for wp in &p.waypoints {
            debug_assert_eq!(wp.len(), dim);
            for &v in wp.coords() {
                w.write_f64::<LittleEndian>(v)?;
            }
        }
    }
    w.flush()?;
    let json = serde_json::to_string_pretty(meta)?;
    std::fs::write(sidecar_path(path), json + "\n")?;
    Ok(())
}

/// Loads the binary corpus; the sidecar is optional (None when missing).
pub fn load_dataset(path: &Path) -> Result<(Vec<OraclePath>, Option<DatasetMeta>), DatasetError> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DATASET_MAGIC {
        return Err(DatasetError::BadMagic);
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != DATASET_VERSION {
        return Err(DatasetError::BadVersion(version));
    }
    let dim = r.read_u32::<LittleEndian>()? as usize;
    if dim == 0 {
        return Err(DatasetError::Malformed("dimension is zero".into()));
    }
    let count = r.read_u64::<LittleEndian>()?;
    let mut paths = Vec::new();
    for i in 0..count {
        let n = r.read_u32::<LittleEndian>()? as usize;
        if n < 2 {
            return Err(DatasetError::Malformed(format!(
                "path {i} has {n} waypoints; need at least 2"
            )));
        }
        let mut waypoints = Vec::with_capacity(n);
        for _ in 0..n {
            let mut coords = vec![0.0f64; dim];
            for c in coords.iter_mut() {
                *c = r.read_f64::<LittleEndian>()?;
            }
            let cfg = Config::new(coords)
                .map_err(|e| DatasetError::Malformed(format!("path {i}: {e}")))?;
            waypoints.push(cfg);
        }
        paths.push(OraclePath {
            waypoints,
            source: PathSource::AStar,
        });
    }
    let meta = match std::fs::read_to_string(sidecar_path(path)) {
        Ok(s) => Some(serde_json::from_str(&s)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(e.into()),
    };
    Ok((paths, meta))
}
