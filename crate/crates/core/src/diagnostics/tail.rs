use serde::{Deserialize, Serialize};

use crate::dynamics::neighborhood;
use crate::error::{invalid, CoreError, Result};
use crate::geometry::{hull2d, points_of, Vec2};
use crate::params::ModelParams;
use crate::state::{dist, TokenConfiguration};
use crate::trajectory::Trajectory;

/// Default `gamma` as a multiple of the sensitivity.
pub const DEFAULT_GAMMA_FACTOR: f64 = 0.1;

/// Default tail window: this fraction of the steps, ending at the last one.
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.25;

/// Inclusive range of steps `start..=end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailWindow {
    pub start: usize,
    pub end: usize,
}

impl TailWindow {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    /// The last `fraction` of `0..=last`, always containing `last`.
    pub fn last_fraction(last: usize, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(invalid(
                "window",
                format!("fraction must be in (0, 1], got {fraction}"),
            ));
        }
        let len = (fraction * last as f64).floor() as usize;
        Ok(Self {
            start: last - len.min(last),
            end: last,
        })
    }

    pub fn steps(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }

    pub fn check(&self, trajectory: &Trajectory) -> Result<()> {
        let last = trajectory.last_step();
        if self.start > self.end || self.end > last {
            return Err(CoreError::EmptyWindow {
                start: self.start,
                end: self.end,
                last,
            });
        }
        Ok(())
    }
}

pub(crate) fn hood_diameter(config: &TokenConfiguration, hood: &[usize]) -> f64 {
    let mut d: f64 = 0.0;
    for (a, &k) in hood.iter().enumerate() {
        for &l in &hood[a + 1..] {
            d = d.max(dist(config.row(k), config.row(l)));
        }
    }
    d
}

/// `d_i = max_{k,l in C_i} ||x_k - x_l||`.
pub fn neighbor_diameter(
    i: usize,
    config: &TokenConfiguration,
    params: &ModelParams,
    delta: f64,
) -> Result<f64> {
    let hood = neighborhood(i, config, params, delta)?;
    Ok(hood_diameter(config, &hood))
}

/// Nearest final-hull vertex of an S1 token.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct S1VertexCheck {
    pub token: usize,
    pub vertex: Vec2,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailClassification {
    /// Tokens whose neighborhood diameter dropped below `gamma` somewhere in
    /// the window.
    pub s1: Vec<usize>,
    /// Tokens with `d_i(t) >= gamma` throughout the window.
    pub s2: Vec<usize>,
    pub gamma: f64,
    pub window: TailWindow,
    /// Per token, the smallest and largest `d_i(t)` seen in the window.
    pub diameter_range: Vec<(f64, f64)>,
    /// For planar runs, each S1 token's distance to the nearest vertex of the
    /// final hull.
    pub s1_vertices: Option<Vec<S1VertexCheck>>,
}

impl TailClassification {
    pub fn in_s2(&self, token: usize) -> bool {
        self.s2.binary_search(&token).is_ok()
    }

    pub fn n(&self) -> usize {
        self.s1.len() + self.s2.len()
    }

    /// Largest distance from an S1 token to its nearest final-hull vertex.
    pub fn max_s1_vertex_distance(&self) -> Option<f64> {
        self.s1_vertices
            .as_ref()
            .map(|v| v.iter().map(|c| c.distance).fold(0.0, f64::max))
    }
}

/// Splits the tokens by whether `d_i(t) >= gamma` holds on the whole window.
pub fn classify_tail(
    trajectory: &Trajectory,
    gamma: f64,
    window: TailWindow,
) -> Result<TailClassification> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(
            "gamma",
            format!("must be positive and finite, got {gamma}"),
        ));
    }
    window.check(trajectory)?;
    let n = trajectory.n();
    let mut range = vec![(f64::INFINITY, 0.0f64); n];
    for t in window.steps() {
        let config = &trajectory.configs[t];
        for (i, hood) in trajectory.neighborhoods_at(t)?.iter().enumerate() {
            let d = hood_diameter(config, hood);
            range[i].0 = range[i].0.min(d);
            range[i].1 = range[i].1.max(d);
        }
    }
    let (s2, s1): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| range[i].0 >= gamma);
    let s1_vertices = if trajectory.dim() == 2 {
        let last = points_of(trajectory.last())?;
        let hull = hull2d(&last)?;
        Some(
            s1.iter()
                .map(|&token| {
                    let x = last[token];
                    let (vertex, distance) = hull
                        .vertices()
                        .iter()
                        .map(|&v| (v, v.dist(x)))
                        .min_by(|a, b| a.1.total_cmp(&b.1))
                        .expect("hull has a vertex");
                    S1VertexCheck {
                        token,
                        vertex,
                        distance,
                    }
                })
                .collect(),
        )
    } else {
        None
    };
    Ok(TailClassification {
        s1,
        s2,
        gamma,
        window,
        diameter_range: range,
        s1_vertices,
    })
}

/// Neighborhood structure of the tail relative to a classification.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PropositionReport {
    /// `(t, i)` with no S1 token in `C_i(t)`.
    pub no_s1_neighbor: Vec<(usize, usize)>,
    /// `(t, i, j)` with `i` in S1 and `j` in S2 in `C_i(t)`.
    pub s1_sees_s2: Vec<(usize, usize, usize)>,
    /// `(t, count)` of ordered pairs `i != j` in S2 with `j` in `C_i(t)`.
    /// Logged only.
    pub s2_influence: Vec<(usize, usize)>,
}

impl PropositionReport {
    pub fn holds(&self) -> bool {
        self.no_s1_neighbor.is_empty() && self.s1_sees_s2.is_empty()
    }
}

/// Checks over the classification window that every neighborhood meets S1
/// and that no S1 token has an S2 neighbor.
pub fn proposition_checks(
    trajectory: &Trajectory,
    class: &TailClassification,
) -> Result<PropositionReport> {
    class.window.check(trajectory)?;
    if class.n() != trajectory.n() {
        return Err(CoreError::LengthMismatch {
            what: "classification vs tokens",
            left: class.n(),
            right: trajectory.n(),
        });
    }
    let mut report = PropositionReport::default();
    for t in class.window.steps() {
        let mut pairs = 0;
        for (i, hood) in trajectory.neighborhoods_at(t)?.iter().enumerate() {
            if hood.iter().all(|&j| class.in_s2(j)) {
                report.no_s1_neighbor.push((t, i));
            }
            if class.in_s2(i) {
                pairs += hood.iter().filter(|&&j| j != i && class.in_s2(j)).count();
            } else {
                for &j in hood.iter().filter(|&&j| class.in_s2(j)) {
                    report.s1_sees_s2.push((t, i, j));
                }
            }
        }
        if pairs > 0 {
            report.s2_influence.push((t, pairs));
        }
    }
    Ok(report)
}
