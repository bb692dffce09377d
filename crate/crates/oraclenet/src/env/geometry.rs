//! Exact 2D workspace geometry: point and segment tests against circles and
//! convex polygons. Obstacle sets are closed, so boundary contact counts as a
//! hit everywhere in this module.

pub type Pt = [f64; 2];

#[inline]
pub fn sub(a: Pt, b: Pt) -> Pt {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn cross(a: Pt, b: Pt) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn dot(a: Pt, b: Pt) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn dist_sq(a: Pt, b: Pt) -> f64 {
    let d = sub(a, b);
    dot(d, d)
}

/// Signed area of the triangle (a, b, c); positive when c lies left of a→b.
#[inline]
fn orient(a: Pt, b: Pt, c: Pt) -> f64 {
    cross(sub(b, a), sub(c, a))
}

/// True when `p` lies on the closed segment a–b, assuming p is collinear with it.
fn on_segment(a: Pt, b: Pt, p: Pt) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test, touching and collinear overlap included.
pub fn segments_intersect(a1: Pt, a2: Pt, b1: Pt, b2: Pt) -> bool {
    let d1 = orient(b1, b2, a1);
    let d2 = orient(b1, b2, a2);
    let d3 = orient(a1, a2, b1);
    let d4 = orient(a1, a2, b2);

    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(b1, b2, a1))
        || (d2 == 0.0 && on_segment(b1, b2, a2))
        || (d3 == 0.0 && on_segment(a1, a2, b1))
        || (d4 == 0.0 && on_segment(a1, a2, b2))
}

/// Squared distance from point `p` to the closed segment a–b.
pub fn point_segment_dist_sq(p: Pt, a: Pt, b: Pt) -> f64 {
    let ab = sub(b, a);
    let len_sq = dot(ab, ab);
    if len_sq == 0.0 {
        return dist_sq(p, a);
    }
    let t = (dot(sub(p, a), ab) / len_sq).clamp(0.0, 1.0);
    let closest = [a[0] + t * ab[0], a[1] + t * ab[1]];
    dist_sq(p, closest)
}

#[inline]
pub fn point_in_circle(p: Pt, center: Pt, radius: f64) -> bool {
    dist_sq(p, center) <= radius * radius
}

pub fn segment_hits_circle(a: Pt, b: Pt, center: Pt, radius: f64) -> bool {
    point_segment_dist_sq(center, a, b) <= radius * radius
}

/// Point-in-convex-polygon half-plane test; vertices must be CCW.
pub fn point_in_convex_polygon(p: Pt, vertices: &[Pt]) -> bool {
    let n = vertices.len();
    for i in 0..n {
        let v0 = vertices[i];
        let v1 = vertices[(i + 1) % n];
        if orient(v0, v1, p) < 0.0 {
            return false;
        }
    }
    true
}

pub fn segment_hits_polygon(a: Pt, b: Pt, vertices: &[Pt]) -> bool {
    if point_in_convex_polygon(a, vertices) || point_in_convex_polygon(b, vertices) {
        return true;
    }
    let n = vertices.len();
    for i in 0..n {
        if segments_intersect(a, b, vertices[i], vertices[(i + 1) % n]) {
            return true;
        }
    }
    false
}

/// Vertices form a strictly convex, simple, counter-clockwise polygon.
/// Collinear triples and repeated vertices are rejected.
pub fn is_strictly_convex_ccw(vertices: &[Pt]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        if orient(a, b, c) <= 0.0 {
            return false;
        }
    }
    true
}
