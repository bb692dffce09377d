//! Deterministic SVG stills of environments and paths.
//!
//! Gridworld paths are drawn as polylines with a red start and green goal
//! marker. Arm paths are drawn in the workspace as one link-chain polyline
//! per waypoint, first chain red, last chain green, so the sweep reads as a
//! trail. No timestamps or random ids: the same scene always renders to the
//! same bytes.

use crate::env::geometry::Pt;
use crate::env::{Config, EnvError, EnvKind, Environment, Shape};

const CANVAS_WIDTH: f64 = 640.0;
const MARGIN_FRAC: f64 = 0.04;
const OBSTACLE_FILL: &str = "#8a8a8a";
const PATH_STROKE: &str = "#1f6fb4";
const START_FILL: &str = "#d62728";
const GOAL_FILL: &str = "#2ca02c";

struct Frame {
    scale: f64,
    x0: f64,
    y1: f64,
    margin: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Frame {
        let extent_x = (x1 - x0).max(1e-9);
        let extent_y = (y1 - y0).max(1e-9);
        let margin = MARGIN_FRAC * CANVAS_WIDTH;
        let scale = (CANVAS_WIDTH - 2.0 * margin) / extent_x;
        Frame {
            scale,
            x0,
            y1,
            margin,
            width: CANVAS_WIDTH,
            height: extent_y * scale + 2.0 * margin,
        }
    }

    fn px(&self, p: Pt) -> (f64, f64) {
        (
            self.margin + (p[0] - self.x0) * self.scale,
            self.margin + (self.y1 - p[1]) * self.scale,
        )
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    // Normalize negative zero so identical scenes render identical bytes.
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn polyline(frame: &Frame, points: &[Pt], stroke: &str, width: f64, opacity: f64) -> String {
    let coords: Vec<String> = points
        .iter()
        .map(|&p| {
            let (x, y) = frame.px(p);
            format!("{},{}", num(x), num(y))
        })
        .collect();
    format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\" stroke-opacity=\"{}\" stroke-linejoin=\"round\"/>\n",
        coords.join(" "),
        stroke,
        num(width),
        num(opacity),
    )
}

fn marker(frame: &Frame, p: Pt, fill: &str) -> String {
    let (x, y) = frame.px(p);
    format!(
        "<circle cx=\"{}\" cy=\"{}\" r=\"5\" fill=\"{}\"/>\n",
        num(x),
        num(y),
        fill
    )
}

fn obstacle(frame: &Frame, shape: &Shape) -> String {
    match shape {
        Shape::Circle { center, radius } => {
            let (x, y) = frame.px(*center);
            format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"/>\n",
                num(x),
                num(y),
                num(radius * frame.scale),
                OBSTACLE_FILL
            )
        }
        Shape::Polygon { vertices } => {
            let coords: Vec<String> = vertices
                .iter()
                .map(|&p| {
                    let (x, y) = frame.px(p);
                    format!("{},{}", num(x), num(y))
                })
                .collect();
            format!(
                "<polygon points=\"{}\" fill=\"{}\"/>\n",
                coords.join(" "),
                OBSTACLE_FILL
            )
        }
    }
}

fn shape_bbox(shape: &Shape) -> (Pt, Pt) {
    match shape {
        Shape::Circle { center, radius } => (
            [center[0] - radius, center[1] - radius],
            [center[0] + radius, center[1] + radius],
        ),
        Shape::Polygon { vertices } => {
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for v in vertices {
                for k in 0..2 {
                    lo[k] = lo[k].min(v[k]);
                    hi[k] = hi[k].max(v[k]);
                }
            }
            (lo, hi)
        }
    }
}

fn open_svg(frame: &Frame) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n",
        w = num(frame.width),
        h = num(frame.height),
    )
}

/// Renders every path over the environment. Gridworlds draw the c-space
/// directly; arm environments draw the workspace with one chain per
/// waypoint. Waypoint dimension must match the environment.
pub fn render(env: &Environment, paths: &[Vec<Config>]) -> Result<String, EnvError> {
    match env.kind() {
        EnvKind::Gridworld2d => render_gridworld(env, paths),
        EnvKind::PlanarArm => render_arm(env, paths),
    }
}

fn render_gridworld(env: &Environment, paths: &[Vec<Config>]) -> Result<String, EnvError> {
    for path in paths {
        for c in path {
            env.is_free(c)?; // dimension check only; collisions still render
        }
    }
    let b = env.bounds();
    let frame = Frame::new(b[0][0], b[0][1], b[1][0], b[1][1]);
    let mut out = open_svg(&frame);
    for s in env.obstacles() {
        out.push_str(&obstacle(&frame, s));
    }
    for path in paths {
        let pts: Vec<Pt> = path.iter().map(|c| [c.coords()[0], c.coords()[1]]).collect();
        if pts.len() >= 2 {
            out.push_str(&polyline(&frame, &pts, PATH_STROKE, 2.0, 0.9));
        }
        if let (Some(&first), Some(&last)) = (pts.first(), pts.last()) {
            out.push_str(&marker(&frame, first, START_FILL));
            out.push_str(&marker(&frame, last, GOAL_FILL));
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn chain_points(env: &Environment, q: &Config) -> Result<Vec<Pt>, EnvError> {
    let segs = env.forward_kinematics(q)?;
    let mut pts = vec![[0.0, 0.0]];
    for (_, end) in segs {
        pts.push(end);
    }
    Ok(pts)
}

fn render_arm(env: &Environment, paths: &[Vec<Config>]) -> Result<String, EnvError> {
    let reach: f64 = env.link_lengths().iter().sum();
    let mut lo = [-reach, -reach];
    let mut hi = [reach, reach];
    for s in env.obstacles() {
        let (slo, shi) = shape_bbox(s);
        for k in 0..2 {
            lo[k] = lo[k].min(slo[k]);
            hi[k] = hi[k].max(shi[k]);
        }
    }
    let frame = Frame::new(lo[0], hi[0], lo[1], hi[1]);
    let mut out = open_svg(&frame);
    for s in env.obstacles() {
        out.push_str(&obstacle(&frame, s));
    }
    for path in paths {
        let n = path.len();
        for (i, q) in path.iter().enumerate() {
            let pts = chain_points(env, q)?;
            let (stroke, width, opacity) = if i == 0 {
                (START_FILL, 2.5, 1.0)
            } else if i + 1 == n {
                (GOAL_FILL, 2.5, 1.0)
            } else {
                (PATH_STROKE, 1.5, 0.35)
            };
            out.push_str(&polyline(&frame, &pts, stroke, width, opacity));
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}
