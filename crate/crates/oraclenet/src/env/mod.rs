//! Configuration spaces: bounds, workspace obstacles, and the collision
//! predicates every planner in this crate relies on.
//!
//! Two kinds of environment exist. `GridWorld2d` is a planar point robot
//! whose c-space equals the workspace. `PlanarArm` is a serial chain anchored
//! at the workspace origin; its c-space is the joint-angle box and obstacles
//! act on it implicitly through forward-kinematic collision checks.

pub mod geometry;

use geometry::Pt;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::ops::Deref;
use std::path::Path;

/// Rejection-sampling attempt cap for [`Environment::sample_free`].
pub const DEFAULT_SAMPLE_ATTEMPTS: usize = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("dimension mismatch: environment has {expected} axes, config has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("configuration contains a non-finite coordinate")]
    NonFinite,
    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("free-space sampling exhausted after {attempts} attempts")]
    SamplingExhausted { attempts: usize },
    #[error("operation requires a planar-arm environment")]
    NotPlanarArm,
    #[error("no bundled environment named {0:?}")]
    UnknownBundled(String),
    #[error("failed to parse environment JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A point in d-dimensional c-space. Coordinates are grid units for the 2D
/// world and radians for manipulator joints. All coordinates are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Config(Vec<f64>);

impl Config {
    pub fn new(coords: Vec<f64>) -> Result<Self, EnvError> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(EnvError::NonFinite);
        }
        Ok(Config(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Config {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Total Euclidean length of a waypoint sequence.
pub fn polyline_length(waypoints: &[Config]) -> f64 {
    waypoints
        .windows(2)
        .map(|w| euclidean(&w[0], &w[1]))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Gridworld2d,
    PlanarArm,
}

/// A workspace obstacle. Obstacle sets are closed: touching the boundary is a
/// collision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Circle { center: Pt, radius: f64 },
    Polygon { vertices: Vec<Pt> },
}

impl Shape {
    fn contains_point(&self, p: Pt) -> bool {
        match self {
            Shape::Circle { center, radius } => geometry::point_in_circle(p, *center, *radius),
            Shape::Polygon { vertices } => geometry::point_in_convex_polygon(p, vertices),
        }
    }

    fn hits_segment(&self, a: Pt, b: Pt) -> bool {
        match self {
            Shape::Circle { center, radius } => {
                geometry::segment_hits_circle(a, b, *center, *radius)
            }
            Shape::Polygon { vertices } => geometry::segment_hits_polygon(a, b, vertices),
        }
    }

    fn validate(&self) -> Result<(), EnvError> {
        match self {
            Shape::Circle { center, radius } => {
                if !center.iter().all(|c| c.is_finite()) || !radius.is_finite() {
                    return Err(EnvError::InvalidSpec("non-finite circle".into()));
                }
                if *radius <= 0.0 {
                    return Err(EnvError::InvalidSpec("circle radius must be > 0".into()));
                }
            }
            Shape::Polygon { vertices } => {
                if vertices.iter().flatten().any(|c| !c.is_finite()) {
                    return Err(EnvError::InvalidSpec("non-finite polygon vertex".into()));
                }
                if !geometry::is_strictly_convex_ccw(vertices) {
                    return Err(EnvError::InvalidSpec(
                        "polygon must be simple, strictly convex, and CCW".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Serialized form of an environment, as stored in env spec files.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct EnvSpec {
    kind: EnvKind,
    bounds: Vec<[f64; 2]>,
    obstacles: Vec<Shape>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    link_lengths: Vec<f64>,
}

/// An immutable c-space description: per-axis closed bounds, workspace
/// obstacles, and (for arms) link lengths. All operations are read-only.
#[derive(Debug, Clone)]
pub struct Environment {
    kind: EnvKind,
    bounds: Vec<[f64; 2]>,
    obstacles: Vec<Shape>,
    link_lengths: Vec<f64>,
}

impl Environment {
    /// A 2D point-robot world on the given bounds.
    pub fn gridworld2d(bounds: [[f64; 2]; 2], obstacles: Vec<Shape>) -> Result<Self, EnvError> {
        Self::from_spec(EnvSpec {
            kind: EnvKind::Gridworld2d,
            bounds: bounds.to_vec(),
            obstacles,
            link_lengths: vec![],
        })
    }

    /// A planar arm anchored at the origin with default joint bounds:
    /// base joint [0, 2π], every other joint [−π, π].
    pub fn planar_arm(link_lengths: Vec<f64>, obstacles: Vec<Shape>) -> Result<Self, EnvError> {
        use std::f64::consts::PI;
        let mut bounds = vec![[0.0, 2.0 * PI]];
        bounds.extend(std::iter::repeat([-PI, PI]).take(link_lengths.len().saturating_sub(1)));
        Self::from_spec(EnvSpec {
            kind: EnvKind::PlanarArm,
            bounds,
            obstacles,
            link_lengths,
        })
    }

    fn from_spec(spec: EnvSpec) -> Result<Self, EnvError> {
        if spec.bounds.is_empty() {
            return Err(EnvError::InvalidSpec("bounds must not be empty".into()));
        }
        for b in &spec.bounds {
            if !b[0].is_finite() || !b[1].is_finite() || b[0] >= b[1] {
                return Err(EnvError::InvalidSpec(format!(
                    "degenerate bound [{}, {}]",
                    b[0], b[1]
                )));
            }
        }
        for s in &spec.obstacles {
            s.validate()?;
        }
        match spec.kind {
            EnvKind::Gridworld2d => {
                if spec.bounds.len() != 2 {
                    return Err(EnvError::InvalidSpec(
                        "gridworld2d requires exactly 2 axes".into(),
                    ));
                }
                if !spec.link_lengths.is_empty() {
                    return Err(EnvError::InvalidSpec(
                        "gridworld2d takes no link_lengths".into(),
                    ));
                }
            }
            EnvKind::PlanarArm => {
                if spec.link_lengths.is_empty() {
                    return Err(EnvError::InvalidSpec(
                        "planar_arm requires link_lengths".into(),
                    ));
                }
                if spec.link_lengths.len() != spec.bounds.len() {
                    return Err(EnvError::InvalidSpec(format!(
                        "planar_arm dimension {} != link count {}",
                        spec.bounds.len(),
                        spec.link_lengths.len()
                    )));
                }
                if spec.link_lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
                    return Err(EnvError::InvalidSpec("link lengths must be > 0".into()));
                }
            }
        }
        Ok(Environment {
            kind: spec.kind,
            bounds: spec.bounds,
            obstacles: spec.obstacles,
            link_lengths: spec.link_lengths,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self, EnvError> {
        let spec: EnvSpec = serde_json::from_str(s)?;
        Self::from_spec(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EnvError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    fn spec(&self) -> EnvSpec {
        EnvSpec {
            kind: self.kind,
            bounds: self.bounds.clone(),
            obstacles: self.obstacles.clone(),
            link_lengths: self.link_lengths.clone(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.spec()).expect("env spec serializes")
    }

    /// SHA-256 of the canonical (compact) JSON spec, hex encoded. Identifies
    /// the environment in manifests and path files.
    pub fn spec_hash(&self) -> String {
        let canonical = serde_json::to_string(&self.spec()).expect("env spec serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn kind(&self) -> EnvKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    pub fn obstacles(&self) -> &[Shape] {
        &self.obstacles
    }

    pub fn link_lengths(&self) -> &[f64] {
        &self.link_lengths
    }

    fn check_dim(&self, q: &[f64]) -> Result<(), EnvError> {
        if q.len() != self.dim() {
            return Err(EnvError::DimensionMismatch {
                expected: self.dim(),
                got: q.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn in_bounds_raw(&self, q: &[f64]) -> bool {
        q.iter()
            .zip(&self.bounds)
            .all(|(&c, b)| c >= b[0] && c <= b[1])
    }

    /// Collision predicate on raw coordinates; assumes the dimension matches.
    pub(crate) fn is_free_raw(&self, q: &[f64]) -> bool {
        if !self.in_bounds_raw(q) {
            return false;
        }
        match self.kind {
            EnvKind::Gridworld2d => {
                let p = [q[0], q[1]];
                !self.obstacles.iter().any(|s| s.contains_point(p))
            }
            EnvKind::PlanarArm => {
                let mut x = 0.0;
                let mut y = 0.0;
                let mut theta = 0.0;
                for (qi, li) in q.iter().zip(&self.link_lengths) {
                    theta += qi;
                    let nx = x + li * theta.cos();
                    let ny = y + li * theta.sin();
                    if self
                        .obstacles
                        .iter()
                        .any(|s| s.hits_segment([x, y], [nx, ny]))
                    {
                        return false;
                    }
                    x = nx;
                    y = ny;
                }
                true
            }
        }
    }

    /// True iff `q` lies in the free space: within bounds and colliding with
    /// no obstacle (for arms, no link segment touches an obstacle).
    pub fn is_free(&self, q: &Config) -> Result<bool, EnvError> {
        self.check_dim(q)?;
        Ok(self.is_free_raw(q))
    }

    /// Link segments of the arm at configuration `q`. Segment i runs from
    /// joint i to joint i+1; the base joint sits at the workspace origin and
    /// link i's absolute angle is the sum of the first i+1 joint values.
    pub fn forward_kinematics(&self, q: &Config) -> Result<Vec<(Pt, Pt)>, EnvError> {
        if self.kind != EnvKind::PlanarArm {
            return Err(EnvError::NotPlanarArm);
        }
        self.check_dim(q)?;
        let mut segs = Vec::with_capacity(q.len());
        let mut x = 0.0;
        let mut y = 0.0;
        let mut theta = 0.0;
        for (qi, li) in q.coords().iter().zip(&self.link_lengths) {
            theta += qi;
            let nx = x + li * theta.cos();
            let ny = y + li * theta.sin();
            segs.push(([x, y], [nx, ny]));
            x = nx;
            y = ny;
        }
        Ok(segs)
    }

    /// Straight c-space segment check by interpolation at spacing ≤
    /// `resolution`, endpoints included.
    ///
    /// The interpolation parameter set is i/n for n the smallest power of two
    /// with dist/n ≤ resolution, so the samples taken at any finer resolution
    /// are a superset of those at a coarser one: refining the resolution can
    /// flip the verdict only from free to colliding, never the reverse.
    pub fn segment_free(&self, a: &Config, b: &Config, resolution: f64) -> Result<bool, EnvError> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        if !(resolution > 0.0) {
            return Err(EnvError::InvalidParameter(
                "resolution must be > 0".into(),
            ));
        }
        Ok(self.segment_free_raw(a, b, resolution))
    }

    pub(crate) fn segment_free_raw(&self, a: &[f64], b: &[f64], resolution: f64) -> bool {
        let dist = euclidean(a, b);
        if dist == 0.0 {
            return self.is_free_raw(a);
        }
        let mut n: u64 = 1;
        while dist / n as f64 > resolution {
            n *= 2;
            if n > (1 << 40) {
                break;
            }
        }
        let mut q = vec![0.0; a.len()];
        for i in 0..=n {
            let t = i as f64 / n as f64;
            for (k, qk) in q.iter_mut().enumerate() {
                *qk = a[k] + (b[k] - a[k]) * t;
            }
            if !self.is_free_raw(&q) {
                return false;
            }
        }
        true
    }

    /// Uniform rejection sample over the bounds, conditioned on freeness.
    pub fn sample_free<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Config, EnvError> {
        self.sample_free_capped(rng, DEFAULT_SAMPLE_ATTEMPTS)
    }

    pub fn sample_free_capped<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        max_attempts: usize,
    ) -> Result<Config, EnvError> {
        let mut q = vec![0.0; self.dim()];
        for _ in 0..max_attempts {
            for (qk, b) in q.iter_mut().zip(&self.bounds) {
                *qk = b[0] + rng.random::<f64>() * (b[1] - b[0]);
            }
            if self.is_free_raw(&q) {
                return Ok(Config(q));
            }
        }
        Err(EnvError::SamplingExhausted {
            attempts: max_attempts,
        })
    }

    /// Names of the environment specs shipped with the crate.
    pub fn bundled_names() -> &'static [&'static str] {
        &[
            "simple1",
            "simple2",
            "simple3",
            "simple4",
            "difficult1",
            "difficult2",
            "difficult3",
            "difficult4",
        ]
    }

    /// Load one of the bundled 2D environments by name.
    pub fn bundled(name: &str) -> Result<Self, EnvError> {
        let json = match name {
            "simple1" => include_str!("../../../../envs/simple1.json"),
            "simple2" => include_str!("../../../../envs/simple2.json"),
            "simple3" => include_str!("../../../../envs/simple3.json"),
            "simple4" => include_str!("../../../../envs/simple4.json"),
            "difficult1" => include_str!("../../../../envs/difficult1.json"),
            "difficult2" => include_str!("../../../../envs/difficult2.json"),
            "difficult3" => include_str!("../../../../envs/difficult3.json"),
            "difficult4" => include_str!("../../../../envs/difficult4.json"),
            other => return Err(EnvError::UnknownBundled(other.to_string())),
        };
        Self::from_json_str(json)
    }
}
