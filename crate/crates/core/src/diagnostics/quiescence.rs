use serde::{Deserialize, Serialize};

use crate::error::{invalid, CoreError, Result};
use crate::geometry::{points_of, Vec2};
use crate::trajectory::Trajectory;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingDirection {
    In,
    Out,
}

/// Token `token` entered or left the ball between steps `t - 1` and `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossing {
    pub t: usize,
    pub token: usize,
    pub direction: CrossingDirection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuiescenceReport {
    pub vertex: Vec2,
    pub epsilon: f64,
    /// Least `T` after which membership of the closed ball `B(vertex,
    /// epsilon)` never changes. Absent when membership still changes at the
    /// last recorded step.
    pub settling_time: Option<usize>,
    /// Crossings at or after the requested window start.
    pub violations: Vec<Crossing>,
}

/// `delta / (2 + 2 alpha)`, the radius for which balls around vertices of K
/// are guaranteed quiescent.
pub fn theorem_epsilon(alpha: f64, delta: f64) -> f64 {
    delta / (2.0 + 2.0 * alpha)
}

/// Tracks membership of `B(vertex, epsilon)` along the run. Crossings at
/// steps `>= window_start` are reported as violations.
pub fn quiescence(
    trajectory: &Trajectory,
    vertex: Vec2,
    epsilon: f64,
    window_start: usize,
) -> Result<QuiescenceReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(
            "epsilon",
            format!("must be positive and finite, got {epsilon}"),
        ));
    }
    let member = |t: usize| -> Result<Vec<bool>> {
        Ok(points_of(&trajectory.configs[t])?
            .into_iter()
            .map(|x| x.dist(vertex) <= epsilon)
            .collect())
    };
    let mut crossings = Vec::new();
    let mut prev = member(0)?;
    for t in 1..=trajectory.last_step() {
        let now = member(t)?;
        for (token, (&a, &b)) in prev.iter().zip(&now).enumerate() {
            if a != b {
                let direction = if b {
                    CrossingDirection::In
                } else {
                    CrossingDirection::Out
                };
                crossings.push(Crossing {
                    t,
                    token,
                    direction,
                });
            }
        }
        prev = now;
    }
    let last = trajectory.last_step();
    let settling_time = match crossings.last() {
        None => Some(0),
        Some(c) if c.t < last => Some(c.t),
        Some(_) => None,
    };
    let violations = crossings
        .into_iter()
        .filter(|c| c.t >= window_start)
        .collect();
    Ok(QuiescenceReport {
        vertex,
        epsilon,
        settling_time,
        violations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContractionOutcome {
    /// `D(t) ~ c * ratio^t` fitted by least squares on `log D`.
    Fitted {
        ratio: f64,
        /// Max over fitted steps of `|D - fit| / D`.
        residual: f64,
        /// Number of steps used.
        points: usize,
    },
    /// `D` is already at the noise floor at `from_t`.
    Collapsed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionFit {
    pub outcome: ContractionOutcome,
    /// Largest displacement of the cluster mean from its value at `from_t`.
    pub mean_drift: f64,
    pub mean_constant: bool,
}

const MEAN_TOL: f64 = 1e-9;

/// Level (relative to `1 + ||mean||`) below which rounding noise in `D(t)`
/// exceeds one part in 10^7.
const NOISE_FLOOR: f64 = 1e-8;

/// Fits the geometric decay of `D(t) = max_{i in cluster} ||x_i - mean||`
/// from `from_t` until `D` reaches rounding noise.
pub fn contraction_rate(
    trajectory: &Trajectory,
    cluster: &[usize],
    from_t: usize,
) -> Result<ContractionFit> {
    if cluster.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    let last = trajectory.last_step();
    if from_t >= last {
        return Err(CoreError::EmptyWindow {
            start: from_t,
            end: last,
            last,
        });
    }
    for &i in cluster {
        trajectory.initial().check_index(i)?;
    }
    let d = trajectory.dim();
    let stats = |t: usize| -> (Vec<f64>, f64) {
        let c = &trajectory.configs[t];
        let mut mean = vec![0.0; d];
        for &i in cluster {
            for (m, x) in mean.iter_mut().zip(c.row(i)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= cluster.len() as f64);
        let spread = cluster
            .iter()
            .map(|&i| crate::state::dist(c.row(i), &mean))
            .fold(0.0, f64::max);
        (mean, spread)
    };
    let (mean0, d0) = stats(from_t);
    let scale = 1.0 + crate::state::norm(&mean0);
    let floor = NOISE_FLOOR * scale;
    let mut samples = Vec::new();
    let mut mean_drift: f64 = 0.0;
    for t in from_t..=last {
        let (mean, spread) = stats(t);
        mean_drift = mean_drift.max(crate::state::dist(&mean, &mean0));
        if spread <= floor {
            break;
        }
        samples.push((t as f64, spread));
    }
    let mean_constant = mean_drift <= MEAN_TOL;
    if d0 <= floor || samples.len() < 2 {
        return Ok(ContractionFit {
            outcome: ContractionOutcome::Collapsed,
            mean_drift,
            mean_constant,
        });
    }
    let k = samples.len() as f64;
    let tm = samples.iter().map(|s| s.0).sum::<f64>() / k;
    let lm = samples.iter().map(|s| s.1.ln()).sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, y) in &samples {
        sxy += (t - tm) * (y.ln() - lm);
        sxx += (t - tm) * (t - tm);
    }
    let slope = sxy / sxx;
    let intercept = lm - slope * tm;
    let residual = samples
        .iter()
        .map(|&(t, y)| ((intercept + slope * t).exp() - y).abs() / y)
        .fold(0.0, f64::max);
    Ok(ContractionFit {
        outcome: ContractionOutcome::Fitted {
            ratio: slope.exp(),
            residual,
            points: samples.len(),
        },
        mean_drift,
        mean_constant,
    })
}
