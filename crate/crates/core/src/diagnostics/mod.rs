//! Trajectory-level checks of the structural results: nested hulls, quiescent
//! balls around vertices, contraction rates, the S1/S2 tail split and the
//! classification of limits against the maximal alignment set.
//!
//! Quantities referring to the limiting polytope K take a proxy polygon,
//! normally [`limiting_polytope`](crate::geometry::limiting_polytope) of the
//! final state. Since hulls are nested, the proxy contains K.

mod hull;
mod limit;
mod quiescence;
mod tail;

pub use hull::{
    center_clearing, diff_max_check, hull_monotonicity, norm_growth_check, zone_of_influence,
    CenterClearing, DiffMaxSide, DiffMaxViolation, HullViolation, NormViolation, HULL_TOL,
};
pub use limit::{limit_classification, LimitReport, TokenLimit};
pub use quiescence::{
    contraction_rate, quiescence, theorem_epsilon, ContractionFit, ContractionOutcome, Crossing,
    CrossingDirection, QuiescenceReport,
};
pub(crate) use tail::hood_diameter;
pub use tail::{
    classify_tail, neighbor_diameter, proposition_checks, PropositionReport, S1VertexCheck,
    TailClassification, TailWindow, DEFAULT_GAMMA_FACTOR, DEFAULT_WINDOW_FRACTION,
};
