//! Planar convex geometry: hulls, point-polygon distances and the maximal
//! alignment set of a polygon. Everything here assumes `d = 2`.

mod alignment;
mod polygon;
mod vec2;

pub use alignment::{
    index_set, maximal_alignment_set, membership_gap, misaligned_vertices, project_origin_to_edge,
    AlignmentKind, AlignmentPoint, AlignmentSet, DEFAULT_ALIGNMENT_TOL,
};
pub use polygon::{
    distance_to_polygon, eta, hull2d, limiting_polytope, Polygon, PolygonKind, CROSS_TOL,
};
pub use vec2::Vec2;

use crate::error::{CoreError, Result};
use crate::state::TokenConfiguration;

/// Token positions of a planar configuration.
pub fn points_of(config: &TokenConfiguration) -> Result<Vec<Vec2>> {
    if config.dim() != 2 {
        return Err(CoreError::UnsupportedDimension(config.dim()));
    }
    Ok(config.rows().map(|r| Vec2::new(r[0], r[1])).collect())
}
