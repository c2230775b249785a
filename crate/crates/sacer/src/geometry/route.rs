//! Arc-length-parameterized routes, path intersection and conflict points.

use super::GeometryError;
use serde::{Deserialize, Serialize};

pub const DEFAULT_RESAMPLE_STEP_M: f64 = 0.5;
pub const DEFAULT_CONFLICT_THRESHOLD_M: f64 = 5.0;
/// Surrogate-intersection threshold for routes that merge instead of
/// crossing: half a vehicle width.
pub const DEFAULT_MERGE_THRESHOLD_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

fn cross(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ax * by - ay * bx
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.dist(Point::new(a.x + t * dx, a.y + t * dy))
}

/// Fixed path with an arc-length parameterization. Points are spaced at most
/// one resample step apart; `conflict_arclength` is filled by
/// [`assign_conflict_points`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Route {
    pub points: Vec<Point>,
    pub cumulative_arclength: Vec<f64>,
    pub conflict_arclength: Option<f64>,
    pub total_length: f64,
}

impl Route {
    pub fn conflict(&self) -> Result<f64, GeometryError> {
        self.conflict_arclength.ok_or(GeometryError::ConflictUnassigned)
    }

    /// Interpolated position at arc-length `s` (clamped to the route).
    pub fn position_at(&self, s: f64) -> Point {
        let s = s.clamp(0.0, self.total_length);
        let i = self.segment_index(s);
        let (a, b) = (self.points[i], self.points[i + 1]);
        let (sa, sb) = (self.cumulative_arclength[i], self.cumulative_arclength[i + 1]);
        let t = if sb > sa { (s - sa) / (sb - sa) } else { 0.0 };
        Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
    }

    /// Tangent heading (radians) of the segment containing arc-length `s`.
    pub fn heading_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.total_length);
        let i = self.segment_index(s);
        let (a, b) = (self.points[i], self.points[i + 1]);
        (b.y - a.y).atan2(b.x - a.x)
    }

    fn segment_index(&self, s: f64) -> usize {
        // Last index i with cumulative[i] <= s, capped so i+1 is valid.
        let n = self.cumulative_arclength.len();
        let i = self
            .cumulative_arclength
            .partition_point(|&c| c <= s)
            .saturating_sub(1);
        i.min(n - 2)
    }

    /// Minimum distance from `p` to this route's polyline.
    pub fn distance_to_polyline(&self, p: Point) -> f64 {
        self.points
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Arc-length of the closest point on the polyline to `p`.
    pub fn project(&self, p: Point) -> f64 {
        let mut best = f64::INFINITY;
        let mut best_s = 0.0;
        for i in 0..self.points.len() - 1 {
            let (a, b) = (self.points[i], self.points[i + 1]);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len2 = dx * dx + dy * dy;
            let t = if len2 == 0.0 {
                0.0
            } else {
                (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
            };
            let q = Point::new(a.x + t * dx, a.y + t * dy);
            let d = p.dist(q);
            if d < best {
                best = d;
                let seg = self.cumulative_arclength[i + 1] - self.cumulative_arclength[i];
                best_s = self.cumulative_arclength[i] + t * seg;
            }
        }
        best_s
    }

    /// Net heading change along the route, in radians (left turns positive).
    pub fn net_heading_change(&self) -> f64 {
        let mut total = 0.0;
        for w in self.points.windows(3) {
            let h0 = (w[1].y - w[0].y).atan2(w[1].x - w[0].x);
            let h1 = (w[2].y - w[1].y).atan2(w[2].x - w[1].x);
            let mut d = h1 - h0;
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            total += d;
        }
        total
    }
}

/// Resample a polyline at uniform arc-length spacing.
///
/// The source endpoint is kept, so `total_length` equals the source polyline
/// length and the final spacing may be shorter than `resample_step`.
pub fn build_route(positions: &[Point], resample_step: f64) -> Result<Route, GeometryError> {
    if resample_step <= 0.0 {
        return Err(GeometryError::InvalidResampleStep(resample_step));
    }
    // Drop zero-length segments.
    let mut pts: Vec<Point> = Vec::with_capacity(positions.len());
    for &p in positions {
        if pts.last().map_or(true, |q: &Point| q.dist(p) > 0.0) {
            pts.push(p);
        }
    }
    if pts.len() < 2 {
        return Err(GeometryError::DegeneratePath);
    }

    let mut cum = vec![0.0];
    for w in pts.windows(2) {
        cum.push(cum.last().unwrap() + w[0].dist(w[1]));
    }
    let total = *cum.last().unwrap();
    if total <= 0.0 {
        return Err(GeometryError::DegeneratePath);
    }

    let mut points = Vec::new();
    let mut arcs = Vec::new();
    let mut seg = 0usize;
    let steps = (total / resample_step + 1e-12).floor() as usize;
    for k in 0..=steps {
        let s = (k as f64 * resample_step).min(total);
        while seg + 2 < cum.len() && cum[seg + 1] <= s {
            seg += 1;
        }
        let (a, b) = (pts[seg], pts[seg + 1]);
        let (sa, sb) = (cum[seg], cum[seg + 1]);
        let t = if sb > sa { ((s - sa) / (sb - sa)).clamp(0.0, 1.0) } else { 0.0 };
        points.push(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
        arcs.push(s);
    }
    if total - arcs.last().unwrap() > 1e-9 {
        points.push(pts[pts.len() - 1]);
        arcs.push(total);
    }

    Ok(Route {
        points,
        cumulative_arclength: arcs,
        conflict_arclength: None,
        total_length: total,
    })
}

/// First transversal crossing of segment chains `a` and `b`, scanned in `a`'s
/// arc-length order. Returns `(point, a_segment_index)`.
fn first_crossing(a: &Route, b: &Route) -> Option<Point> {
    for i in 0..a.points.len() - 1 {
        let (a1, a2) = (a.points[i], a.points[i + 1]);
        let (rx, ry) = (a2.x - a1.x, a2.y - a1.y);
        let mut best_t = f64::INFINITY;
        for j in 0..b.points.len() - 1 {
            let (b1, b2) = (b.points[j], b.points[j + 1]);
            let (sx, sy) = (b2.x - b1.x, b2.y - b1.y);
            let denom = cross(rx, ry, sx, sy);
            let scale = (rx.hypot(ry)) * (sx.hypot(sy));
            if denom.abs() <= 1e-12 * scale {
                continue; // parallel or collinear; merges handled separately
            }
            let (qpx, qpy) = (b1.x - a1.x, b1.y - a1.y);
            let t = cross(qpx, qpy, sx, sy) / denom;
            let u = cross(qpx, qpy, rx, ry) / denom;
            let eps = 1e-9;
            if (-eps..=1.0 + eps).contains(&t) && (-eps..=1.0 + eps).contains(&u) && t < best_t {
                best_t = t.clamp(0.0, 1.0);
            }
        }
        if best_t.is_finite() {
            return Some(Point::new(a1.x + best_t * rx, a1.y + best_t * ry));
        }
    }
    None
}

/// Intersection point of two routes with the default merge threshold.
pub fn find_path_intersection(a: &Route, b: &Route) -> Result<Point, GeometryError> {
    find_path_intersection_with(a, b, DEFAULT_MERGE_THRESHOLD_M)
}

/// Intersection point of two routes.
///
/// A transversal crossing wins; otherwise, for routes that merge, the first
/// point of `a` whose distance to `b`'s polyline falls below
/// `merge_threshold` acts as the surrogate intersection point.
pub fn find_path_intersection_with(
    a: &Route,
    b: &Route,
    merge_threshold: f64,
) -> Result<Point, GeometryError> {
    if let Some(p) = first_crossing(a, b) {
        return Ok(p);
    }
    for &p in &a.points {
        if b.distance_to_polyline(p) < merge_threshold {
            return Ok(p);
        }
    }
    Err(GeometryError::NoInteraction {
        threshold: merge_threshold,
    })
}

/// Order-independent intersection point: the midpoint of the two directed
/// lookups, so swapping the routes yields the identical point.
pub fn symmetric_intersection(
    a: &Route,
    b: &Route,
    merge_threshold: f64,
) -> Result<Point, GeometryError> {
    let pa = find_path_intersection_with(a, b, merge_threshold)?;
    let pb = find_path_intersection_with(b, a, merge_threshold)?;
    Ok(pa.midpoint(pb))
}

/// Assign each route its conflict point: the first sampled point whose
/// distance to the shared intersection point drops below `threshold`.
pub fn assign_conflict_points(
    route_a: &Route,
    route_b: &Route,
    threshold: f64,
) -> Result<(Route, Route), GeometryError> {
    assign_conflict_points_with(route_a, route_b, threshold, DEFAULT_MERGE_THRESHOLD_M)
}

pub fn assign_conflict_points_with(
    route_a: &Route,
    route_b: &Route,
    threshold: f64,
    merge_threshold: f64,
) -> Result<(Route, Route), GeometryError> {
    if threshold <= 0.0 {
        return Err(GeometryError::InvalidThreshold(threshold));
    }
    let ip = symmetric_intersection(route_a, route_b, merge_threshold)?;
    let mut out_a = route_a.clone();
    let mut out_b = route_b.clone();
    out_a.conflict_arclength = Some(conflict_arc(route_a, ip, threshold)?);
    out_b.conflict_arclength = Some(conflict_arc(route_b, ip, threshold)?);
    Ok((out_a, out_b))
}

fn conflict_arc(route: &Route, intersection: Point, threshold: f64) -> Result<f64, GeometryError> {
    for (i, &p) in route.points.iter().enumerate() {
        if p.dist(intersection) < threshold {
            return Ok(route.cumulative_arclength[i]);
        }
    }
    Err(GeometryError::NoConflictPoint { threshold })
}
