//! Rate regions as intersections of half-planes in the nonnegative quadrant.

use serde::Serialize;

/// Slack allowed when testing a point against a constraint.
pub const REGION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

impl RatePair {
    pub fn new(r1: f64, r2: f64) -> Self {
        Self { r1, r2 }
    }

    pub fn sum(&self) -> f64 {
        self.r1 + self.r2
    }

    pub fn swapped(&self) -> Self {
        Self { r1: self.r2, r2: self.r1 }
    }
}

/// `a·R₁ + b·R₂ ≤ c` with `a, b ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HalfPlane {
    pub fn r1(c: f64) -> Self {
        Self { a: 1.0, b: 0.0, c }
    }

    pub fn r2(c: f64) -> Self {
        Self { a: 0.0, b: 1.0, c }
    }

    pub fn sum(c: f64) -> Self {
        Self { a: 1.0, b: 1.0, c }
    }

    /// Amount by which `p` exceeds the constraint, negative when inside.
    pub fn excess(&self, p: &RatePair) -> f64 {
        self.a * p.r1 + self.b * p.r2 - self.c
    }
}

/// A downward-closed convex polygon with its corner points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    pub label: String,
    pub constraints: Vec<HalfPlane>,
    /// Corner points ordered by increasing `R₁`, including the origin.
    pub vertices: Vec<RatePair>,
}

impl Region {
    /// Builds the region and computes its corners from the constraints.
    pub fn from_constraints(label: impl Into<String>, constraints: Vec<HalfPlane>) -> Self {
        let mut lines = constraints.clone();
        lines.push(HalfPlane { a: -1.0, b: 0.0, c: 0.0 });
        lines.push(HalfPlane { a: 0.0, b: -1.0, c: 0.0 });
        let mut pts: Vec<RatePair> = Vec::new();
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let (l, m) = (lines[i], lines[j]);
                let det = l.a * m.b - l.b * m.a;
                if det.abs() < 1e-15 {
                    continue;
                }
                let p = RatePair::new((l.c * m.b - l.b * m.c) / det, (l.a * m.c - l.c * m.a) / det);
                if lines.iter().all(|h| h.excess(&p) <= REGION_TOL * (1.0 + h.c.abs())) {
                    pts.push(RatePair::new(p.r1.max(0.0), p.r2.max(0.0)));
                }
            }
        }
        pts.sort_by(|p, q| p.r1.total_cmp(&q.r1).then(q.r2.total_cmp(&p.r2)));
        pts.dedup_by(|p, q| (p.r1 - q.r1).abs() < 1e-12 && (p.r2 - q.r2).abs() < 1e-12);
        // The origin leads, so corners run around the boundary in order.
        if let Some(i) = pts.iter().position(|p| p.r1 == 0.0 && p.r2 == 0.0) {
            let o = pts.remove(i);
            pts.insert(0, o);
        }
        Self { label: label.into(), constraints, vertices: pts }
    }

    /// Downward-closed convex hull of achievable points, described by its
    /// Pareto corners and the supporting lines of its upper-right boundary.
    pub fn from_points(label: impl Into<String>, points: &[RatePair]) -> Self {
        let r1_max = points.iter().map(|p| p.r1).fold(0.0, f64::max);
        let r2_max = points.iter().map(|p| p.r2).fold(0.0, f64::max);
        let mut pts: Vec<RatePair> = points.to_vec();
        pts.push(RatePair::new(0.0, r2_max));
        pts.push(RatePair::new(r1_max, 0.0));
        pts.sort_by(|p, q| p.r1.total_cmp(&q.r1).then(q.r2.total_cmp(&p.r2)));
        let mut hull: Vec<RatePair> = Vec::new();
        for p in pts {
            while hull.len() >= 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (b.r1 - a.r1) * (p.r2 - a.r2) - (b.r2 - a.r2) * (p.r1 - a.r1);
                if cross >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        // Keep the part from the top-left corner to the rightmost point.
        let start = hull.iter().position(|p| p.r2 >= r2_max - 1e-15).unwrap_or(0);
        let front: Vec<RatePair> = hull[start..].to_vec();
        let mut constraints = vec![HalfPlane::r1(r1_max), HalfPlane::r2(r2_max)];
        for w in front.windows(2) {
            let (p, q) = (w[0], w[1]);
            let (a, b) = (p.r2 - q.r2, q.r1 - p.r1);
            if a > 0.0 && b > 0.0 {
                let s = a.max(b);
                constraints.push(HalfPlane { a: a / s, b: b / s, c: (a * p.r1 + b * p.r2) / s });
            }
        }
        let mut vertices = vec![RatePair::new(0.0, 0.0)];
        vertices.extend(front);
        vertices.dedup_by(|p, q| (p.r1 - q.r1).abs() < 1e-12 && (p.r2 - q.r2).abs() < 1e-12);
        Self { label: label.into(), constraints, vertices }
    }

    pub fn contains(&self, p: &RatePair, tol: f64) -> bool {
        p.r1 >= -tol && p.r2 >= -tol && self.constraints.iter().all(|h| h.excess(p) <= tol)
    }

    /// Largest achievable sum rate.
    pub fn max_sum(&self) -> f64 {
        self.vertices.iter().map(RatePair::sum).fold(0.0, f64::max)
    }

    /// The region with the users exchanged.
    pub fn mirrored(&self) -> Self {
        let constraints = self.constraints.iter().map(|h| HalfPlane { a: h.b, b: h.a, c: h.c }).collect();
        let mut vertices: Vec<RatePair> = self.vertices.iter().rev().map(RatePair::swapped).collect();
        vertices.rotate_right(1);
        Self { label: self.label.clone(), constraints, vertices }
    }
}

/// Outcome of testing one region against another.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Containment {
    pub contained: bool,
    /// Largest constraint excess over all inner corners.
    pub worst_excess: f64,
    /// Whether some inner corner lies on an outer constraint line.
    pub touches: bool,
}

/// Checks every corner of `inner` against every constraint of `outer`
/// within [`REGION_TOL`].
pub fn containment_check(inner: &Region, outer: &Region) -> Containment {
    let worst = inner
        .vertices
        .iter()
        .flat_map(|v| outer.constraints.iter().map(move |h| h.excess(v)))
        .fold(f64::NEG_INFINITY, f64::max);
    Containment { contained: worst <= REGION_TOL, worst_excess: worst, touches: worst.abs() <= REGION_TOL }
}
