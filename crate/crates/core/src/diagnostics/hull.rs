use serde::{Deserialize, Serialize};

use crate::error::{invalid, CoreError, Result};
use crate::geometry::{distance_to_polygon, eta, hull2d, points_of, Polygon, PolygonKind, Vec2};
use crate::state::TokenConfiguration;
use crate::trajectory::Trajectory;

/// Default containment tolerance for nested-hull checks.
pub const HULL_TOL: f64 = 1e-9;

/// Token `token` at step `t + 1` lies `depth` outside the hull of step `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullViolation {
    pub t: usize,
    pub token: usize,
    pub depth: f64,
}

/// Checks `Conv(x(t+1)) ⊆ Conv(x(t))` at every step.
pub fn hull_monotonicity(trajectory: &Trajectory, tol: f64) -> Result<Vec<HullViolation>> {
    let mut out = Vec::new();
    let mut prev = hull2d(&points_of(trajectory.initial())?)?;
    for t in 0..trajectory.last_step() {
        let next = points_of(&trajectory.configs[t + 1])?;
        for (token, &x) in next.iter().enumerate() {
            let depth = distance_to_polygon(x, &prev);
            if depth > tol {
                out.push(HullViolation { t, token, depth });
            }
        }
        prev = hull2d(&next)?;
    }
    Ok(out)
}

/// Tokens of `config` that would influence a token sitting at vertex `v`:
/// those within `eta_bound` of `k` with `<v - x, v> <= delta * ||v||`.
pub fn zone_of_influence(
    v: Vec2,
    config: &TokenConfiguration,
    k: &Polygon,
    eta_bound: f64,
    delta: f64,
) -> Result<Vec<usize>> {
    if v == Vec2::ZERO {
        return Err(CoreError::ZeroVector);
    }
    let band = delta * v.norm();
    Ok(points_of(config)?
        .into_iter()
        .enumerate()
        .filter(|&(_, x)| distance_to_polygon(x, k) <= eta_bound && (v - x).dot(v) <= band)
        .map(|(i, _)| i)
        .collect())
}

/// A step where a deep-interior token grew its squared norm by less than
/// the guaranteed amount.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormViolation {
    pub t: usize,
    pub token: usize,
    pub growth: f64,
    pub bound: f64,
}

fn require_identity(trajectory: &Trajectory) -> Result<()> {
    if trajectory.params.interaction().is_identity() {
        Ok(())
    } else {
        Err(invalid(
            "interaction",
            "norm checks assume the identity interaction; whiten first",
        ))
    }
}

/// For every token with `x != 0` inside `k` and at least `delta(t)` away from
/// its boundary, checks
/// `||x(t+1)||^2 - ||x(t)||^2 >= 2 a (delta/n) ||x(t)|| + a^2 (delta/n)^2`
/// with `a = alpha/(1+alpha)`, up to `tol`.
pub fn norm_growth_check(
    trajectory: &Trajectory,
    k: &Polygon,
    tol: f64,
) -> Result<Vec<NormViolation>> {
    require_identity(trajectory)?;
    let mut out = Vec::new();
    if k.kind() != PolygonKind::Proper {
        return Ok(out);
    }
    let n = trajectory.n() as f64;
    let alpha = trajectory.params.alpha();
    let a = alpha / (1.0 + alpha);
    for t in 0..trajectory.last_step() {
        let delta = trajectory.delta_at(t);
        let now = points_of(&trajectory.configs[t])?;
        let next = points_of(&trajectory.configs[t + 1])?;
        for (token, (&x, &y)) in now.iter().zip(&next).enumerate() {
            if x == Vec2::ZERO || !k.contains(x) || k.boundary_distance(x) < delta {
                continue;
            }
            let step = delta / n;
            let bound = 2.0 * a * step * x.norm() + a * a * step * step;
            let growth = y.norm_sq() - x.norm_sq();
            if growth < bound - tol {
                out.push(NormViolation {
                    t,
                    token,
                    growth,
                    bound,
                });
            }
        }
    }
    Ok(out)
}

/// Constants of the interior-clearing bound and what the run shows after
/// `t_lim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterClearing {
    /// `dist(0, ∂K) - delta`.
    pub c_star: f64,
    /// `alpha^2 delta^2 / ((1+alpha)^2 n^2)`.
    pub nu: f64,
    pub min_initial_norm: f64,
    pub max_initial_norm: f64,
    /// `floor(2 c* (M + nu) / (m nu)) + 1`.
    pub t_lim: u64,
    /// Steps at or after `t_lim` present in the run.
    pub checked_steps: usize,
    /// First `(t, token)` with `||x_i(t)|| <= c*` at `t >= t_lim`.
    pub first_violation: Option<(usize, usize)>,
}

/// Evaluates the interior-clearing bound for a constant sensitivity `delta`.
/// Returns `None` when its hypotheses fail: `delta` is not positive, the
/// origin is not at least `delta` inside `k`, or some initial token is zero.
pub fn center_clearing(
    trajectory: &Trajectory,
    k: &Polygon,
    delta: f64,
) -> Result<Option<CenterClearing>> {
    require_identity(trajectory)?;
    if delta.is_nan() || delta <= 0.0 || k.kind() != PolygonKind::Proper || !k.contains(Vec2::ZERO) {
        return Ok(None);
    }
    let c_star = k.boundary_distance(Vec2::ZERO) - delta;
    let norms: Vec<f64> = points_of(trajectory.initial())?
        .iter()
        .map(|x| x.norm())
        .collect();
    let m = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let big_m = norms.iter().copied().fold(0.0, f64::max);
    if c_star <= 0.0 || m <= 0.0 {
        return Ok(None);
    }
    let n = trajectory.n() as f64;
    let alpha = trajectory.params.alpha();
    let nu = alpha * alpha * delta * delta / ((1.0 + alpha) * (1.0 + alpha) * n * n);
    let t_lim = ((2.0 * c_star * (big_m + nu) / (m * nu)).floor() as u64).saturating_add(1);
    let mut checked_steps = 0;
    let mut first_violation = None;
    for t in (t_lim as usize)..=trajectory.last_step() {
        checked_steps += 1;
        let pts = points_of(&trajectory.configs[t])?;
        if let Some(token) = pts.iter().position(|x| x.norm() <= c_star) {
            first_violation = Some((t, token));
            break;
        }
    }
    Ok(Some(CenterClearing {
        c_star,
        nu,
        min_initial_norm: m,
        max_initial_norm: big_m,
        t_lim,
        checked_steps,
        first_violation,
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffMaxSide {
    /// The token maximum fell below the polytope maximum.
    Lower,
    /// The gap exceeded `eta(t) * ||x_i||`.
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffMaxViolation {
    pub t: usize,
    pub token: usize,
    pub gap: f64,
    pub bound: f64,
    pub side: DiffMaxSide,
}

/// Checks `0 <= max_l <x_i, x_l> - max_k <x_i, v_k> <= eta(t) ||x_i||` for
/// steps `from_t..=last`, with `eta(t)` measured against `k`.
pub fn diff_max_check(
    trajectory: &Trajectory,
    k: &Polygon,
    from_t: usize,
    slack: f64,
) -> Result<Vec<DiffMaxViolation>> {
    let mut out = Vec::new();
    for t in from_t..=trajectory.last_step() {
        let config = &trajectory.configs[t];
        let pts = points_of(config)?;
        let eta_t = eta(config, k)?;
        for (token, &x) in pts.iter().enumerate() {
            let tokens_max = pts
                .iter()
                .map(|&y| x.dot(y))
                .fold(f64::NEG_INFINITY, f64::max);
            let poly_max = k
                .vertices()
                .iter()
                .map(|&v| x.dot(v))
                .fold(f64::NEG_INFINITY, f64::max);
            let gap = tokens_max - poly_max;
            let bound = eta_t * x.norm();
            if gap < -slack {
                out.push(DiffMaxViolation {
                    t,
                    token,
                    gap,
                    bound: 0.0,
                    side: DiffMaxSide::Lower,
                });
            } else if gap > bound + slack {
                out.push(DiffMaxViolation {
                    t,
                    token,
                    gap,
                    bound,
                    side: DiffMaxSide::Upper,
                });
            }
        }
    }
    Ok(out)
}
