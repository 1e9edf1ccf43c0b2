use serde::{Deserialize, Serialize};

use super::{points_of, Vec2};
use crate::error::{CoreError, Result};
use crate::state::TokenConfiguration;

/// A hull corner `o -> a -> b` is dropped as collinear when
/// `cross(a - o, b - o) <= CROSS_TOL * |a - o| * |b - o|`, i.e. when the sine
/// of the turn is at most this. The dropped point then lies within
/// `CROSS_TOL * |a - o|` of the kept edge, at any scale. The value sits a
/// few hundred ulps above the rounding error of the cross product, so only
/// numerically collinear points are dropped.
pub const CROSS_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolygonKind {
    Point,
    Segment,
    Proper,
}

/// Convex polygon with counterclockwise vertices, starting from the
/// lexicographically smallest one. Fewer than three vertices make a
/// degenerate point or segment polygon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<Vec2>,
    kind: PolygonKind,
}

impl Polygon {
    fn from_hull(vertices: Vec<Vec2>) -> Self {
        let kind = match vertices.len() {
            1 => PolygonKind::Point,
            2 => PolygonKind::Segment,
            _ => PolygonKind::Proper,
        };
        Self { vertices, kind }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn kind(&self) -> PolygonKind {
        self.kind
    }

    pub fn is_degenerate(&self) -> bool {
        self.kind != PolygonKind::Proper
    }

    /// Edges `(v_k, v_{k+1})`, closing back to the first vertex. A segment
    /// polygon yields its single edge once; a point yields nothing.
    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let r = self.vertices.len();
        let count = match self.kind {
            PolygonKind::Point => 0,
            PolygonKind::Segment => 1,
            PolygonKind::Proper => r,
        };
        (0..count).map(move |k| (self.vertices[k], self.vertices[(k + 1) % r]))
    }

    /// Whether `x` satisfies every counterclockwise half-plane inequality
    /// (or lies on the point/segment for degenerate polygons).
    pub fn contains(&self, x: Vec2) -> bool {
        match self.kind {
            PolygonKind::Point => x == self.vertices[0],
            PolygonKind::Segment => x.dist_to_segment(self.vertices[0], self.vertices[1]) == 0.0,
            PolygonKind::Proper => self.edges().all(|(a, b)| (b - a).cross(x - a) >= 0.0),
        }
    }

    /// Distance from `x` to the boundary, whether `x` is inside or not.
    pub fn boundary_distance(&self, x: Vec2) -> f64 {
        match self.kind {
            PolygonKind::Point => x.dist(self.vertices[0]),
            _ => self
                .edges()
                .map(|(a, b)| x.dist_to_segment(a, b))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn area(&self) -> f64 {
        if self.kind != PolygonKind::Proper {
            return 0.0;
        }
        0.5 * self.edges().map(|(a, b)| a.cross(b)).sum::<f64>()
    }

    /// Removes, one at a time and smallest deviation first, every vertex
    /// lying within `tol` of the segment joining its two neighbours. Near
    /// duplicate vertices and nearly flat corners disappear; the result is
    /// contained in `self` and its boundary moves by at most `tol`.
    pub fn simplified(&self, tol: f64) -> Polygon {
        let mut v = self.vertices.clone();
        if self.kind != PolygonKind::Proper {
            if self.kind == PolygonKind::Segment && v[0].dist(v[1]) <= tol {
                v.truncate(1);
            }
            return Polygon::from_hull(v);
        }
        while v.len() > 2 {
            let r = v.len();
            let (k, dev) = (0..r)
                .map(|k| (k, v[k].dist_to_segment(v[(k + r - 1) % r], v[(k + 1) % r])))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty");
            if dev > tol {
                break;
            }
            v.remove(k);
        }
        if v.len() == 2 && v[0].dist(v[1]) <= tol {
            v.truncate(1);
        }
        // restore the lexicographic starting vertex
        hull2d(&v).expect("non-empty")
    }
}

/// Convex hull by Andrew's monotone chain.
pub fn hull2d(points: &[Vec2]) -> Result<Polygon> {
    if points.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    if let Some(p) = points
        .iter()
        .find(|p| !(p.x.is_finite() && p.y.is_finite()))
    {
        return Err(CoreError::InvalidParameter {
            name: "points",
            reason: format!("non-finite point {p:?}"),
        });
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() == 1 {
        return Ok(Polygon::from_hull(pts));
    }
    let flat = |o: Vec2, a: Vec2, b: Vec2| {
        let (u, w) = (a - o, b - o);
        u.cross(w) <= CROSS_TOL * u.norm() * w.norm()
    };
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && flat(hull[hull.len() - 2], hull[hull.len() - 1], p) {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && flat(hull[hull.len() - 2], hull[hull.len() - 1], p) {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    Ok(Polygon::from_hull(hull))
}

/// Distance from `x` to the polygon (zero inside or on the boundary).
pub fn distance_to_polygon(x: Vec2, k: &Polygon) -> f64 {
    if k.kind() == PolygonKind::Proper && k.contains(x) {
        0.0
    } else {
        k.boundary_distance(x)
    }
}

/// Largest token distance to `k`.
pub fn eta(config: &TokenConfiguration, k: &Polygon) -> Result<f64> {
    Ok(points_of(config)?
        .into_iter()
        .map(|x| distance_to_polygon(x, k))
        .fold(0.0, f64::max))
}

/// Stand-in for the limiting polytope: the hull of `config`, simplified at
/// `tol` so that tokens still collapsing onto a vertex or edge do not leave
/// spurious near-duplicate vertices behind.
pub fn limiting_polytope(config: &TokenConfiguration, tol: f64) -> Result<Polygon> {
    Ok(hull2d(&points_of(config)?)?.simplified(tol))
}
