use serde::{Deserialize, Serialize};

use super::{distance_to_polygon, Polygon, Vec2};
use crate::error::{CoreError, Result};

/// Default absolute tolerance of the `||x||^2 = max_k <x, v_k>` test.
pub const DEFAULT_ALIGNMENT_TOL: f64 = 1e-9;

/// Points closer than this are the same element of S.
const DEDUP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentKind {
    Vertex,
    /// Orthogonal projection of the origin onto an edge.
    FaceProjection,
    /// The origin itself, present when it lies inside the polygon.
    Origin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentPoint {
    pub position: Vec2,
    pub kind: AlignmentKind,
    /// Vertex indices of the generating face (one for a vertex, two for an
    /// edge, empty for the origin).
    pub face: Vec<usize>,
    pub index_set: Vec<usize>,
}

/// The maximal alignment set S of a polygon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSet {
    pub points: Vec<AlignmentPoint>,
}

impl AlignmentSet {
    /// Index and distance of the element of S closest to `x`.
    pub fn nearest(&self, x: Vec2) -> Option<(usize, f64)> {
        self.points
            .iter()
            .enumerate()
            .map(|(k, p)| (k, p.position.dist(x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.points.iter().map(|p| p.position)
    }

    /// No two elements share an index set.
    pub fn has_distinct_index_sets(&self) -> bool {
        self.points.iter().enumerate().all(|(a, p)| {
            self.points[a + 1..]
                .iter()
                .all(|q| q.index_set != p.index_set)
        })
    }
}

fn alignment_gap(x: Vec2, k: &Polygon) -> f64 {
    let best = k
        .vertices()
        .iter()
        .map(|v| x.dot(*v))
        .fold(f64::NEG_INFINITY, f64::max);
    x.norm_sq() - best
}

/// `||x||^2 - max_k <x, v_k>`; zero exactly on S, nonpositive on K.
pub fn membership_gap(x: Vec2, k: &Polygon) -> f64 {
    alignment_gap(x, k)
}

/// Vertices maximizing `<x, v_k>`, ties grouped at `1e-12 * max|<x, v_k>|`.
pub fn index_set(x: Vec2, k: &Polygon) -> Vec<usize> {
    let values: Vec<f64> = k.vertices().iter().map(|v| x.dot(*v)).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale;
    values
        .iter()
        .enumerate()
        .filter(|&(_, &v)| best - v <= tol)
        .map(|(i, _)| i)
        .collect()
}

/// Orthogonal projection of the origin onto the line through `a` and `b`,
/// returned only when it falls within the segment.
pub fn project_origin_to_edge(a: Vec2, b: Vec2) -> Result<Option<Vec2>> {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return Err(CoreError::ZeroLengthEdge);
    }
    let s = -a.dot(ab) / len_sq;
    if (0.0..=1.0).contains(&s) {
        Ok(Some(a + ab * s))
    } else {
        Ok(None)
    }
}

/// All vertices, every in-edge projection of the origin that passes the
/// `||x||^2 = max_k <x, v_k>` test within `tol`, and the origin when it lies
/// in the polygon. Points and segments are handled the same way, so a
/// consensus limit `{p}` gives `S = {p}`.
pub fn maximal_alignment_set(k: &Polygon, tol: f64) -> Result<AlignmentSet> {
    let r = k.vertices().len();
    let mut points: Vec<AlignmentPoint> = k
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, &v)| AlignmentPoint {
            position: v,
            kind: AlignmentKind::Vertex,
            face: vec![i],
            index_set: index_set(v, k),
        })
        .collect();
    let is_new =
        |points: &[AlignmentPoint], x: Vec2| points.iter().all(|p| p.position.dist(x) > DEDUP_TOL);
    for (i, (a, b)) in k.edges().enumerate() {
        if let Some(p) = project_origin_to_edge(a, b)? {
            if alignment_gap(p, k).abs() <= tol && is_new(&points, p) {
                points.push(AlignmentPoint {
                    position: p,
                    kind: AlignmentKind::FaceProjection,
                    face: vec![i, (i + 1) % r],
                    index_set: index_set(p, k),
                });
            }
        }
    }
    let origin = Vec2::ZERO;
    if distance_to_polygon(origin, k) == 0.0
        && alignment_gap(origin, k).abs() <= tol
        && is_new(&points, origin)
    {
        points.push(AlignmentPoint {
            position: origin,
            kind: AlignmentKind::Origin,
            face: Vec::new(),
            index_set: index_set(origin, k),
        });
    }
    Ok(AlignmentSet { points })
}

/// Vertices failing the membership test. Limits of the dynamics never have
/// any; a nonempty answer on a hull proxy means the proxy is not yet close
/// to a limiting polytope.
pub fn misaligned_vertices(k: &Polygon, tol: f64) -> Vec<usize> {
    k.vertices()
        .iter()
        .enumerate()
        .filter(|(_, v)| alignment_gap(**v, k).abs() > tol)
        .map(|(i, _)| i)
        .collect()
}
