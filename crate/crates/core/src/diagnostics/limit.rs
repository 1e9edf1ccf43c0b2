use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{points_of, AlignmentSet, Vec2};
use crate::trajectory::Trajectory;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokenLimit {
    pub token: usize,
    pub position: Vec2,
    /// Index into the alignment set of the nearest element, if S is nonempty.
    pub nearest: Option<usize>,
    pub distance: f64,
    pub outside_s: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub epsilon: f64,
    pub tokens: Vec<TokenLimit>,
}

impl LimitReport {
    pub fn outside(&self) -> impl Iterator<Item = &TokenLimit> + '_ {
        self.tokens.iter().filter(|t| t.outside_s)
    }

    pub fn outside_count(&self) -> usize {
        self.outside().count()
    }

    pub fn max_distance(&self) -> f64 {
        self.tokens.iter().map(|t| t.distance).fold(0.0, f64::max)
    }
}

/// Distance of each final token to the nearest element of `s`; tokens
/// farther than `epsilon` from all of S are flagged.
pub fn limit_classification(
    trajectory: &Trajectory,
    s: &AlignmentSet,
    epsilon: f64,
) -> Result<LimitReport> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(invalid(
            "epsilon",
            format!("must be nonnegative and finite, got {epsilon}"),
        ));
    }
    let tokens = points_of(trajectory.last())?
        .into_iter()
        .enumerate()
        .map(|(token, position)| {
            let (nearest, distance) = match s.nearest(position) {
                Some((k, d)) => (Some(k), d),
                None => (None, f64::INFINITY),
            };
            TokenLimit {
                token,
                position,
                nearest,
                distance,
                outside_s: distance > epsilon,
            }
        })
        .collect();
    Ok(LimitReport { epsilon, tokens })
}
