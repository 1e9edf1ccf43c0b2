use serde::{Deserialize, Serialize};

use crate::dynamics::{apply_neighborhoods, neighborhoods_for, softmax_step, TransitionMatrix};
use crate::error::{invalid, CoreError, Result};
use crate::params::{DeltaSchedule, DynamicsKind, ModelParams};
use crate::state::TokenConfiguration;

/// Which per-step data a run keeps besides the states.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Retention {
    pub neighborhoods: bool,
    pub matrices: bool,
}

impl Retention {
    pub const ALL: Retention = Retention {
        neighborhoods: true,
        matrices: true,
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Horizon,
    /// Max displacement fell to or below `stop_tol`. Not convergence: the
    /// dynamics never reaches its limit in finite time.
    NumericallySettled,
}

/// A recorded run. `configs[t]` is the state at step `t`; per-step data
/// (`displacements`, `neighborhoods`, `matrices`) is indexed by the step that
/// maps `configs[t]` to `configs[t + 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: ModelParams,
    pub schedule: DeltaSchedule,
    pub seed: Option<u64>,
    pub stop: StopReason,
    pub displacements: Vec<f64>,
    pub configs: Vec<TokenConfiguration>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighborhoods: Option<Vec<Vec<Vec<usize>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<TransitionMatrix>>,
}

impl Trajectory {
    /// Wraps externally produced states (no retained data, horizon stop).
    pub fn from_configs(
        configs: Vec<TokenConfiguration>,
        params: ModelParams,
        schedule: DeltaSchedule,
    ) -> Result<Self> {
        if configs.is_empty() {
            return Err(CoreError::EmptyConfiguration);
        }
        let (n, d) = (configs[0].n(), configs[0].dim());
        for c in &configs {
            if c.n() != n || c.dim() != d {
                return Err(CoreError::DimensionMismatch {
                    expected: n * d,
                    found: c.n() * c.dim(),
                });
            }
        }
        let configs: Vec<_> = configs
            .into_iter()
            .enumerate()
            .map(|(t, c)| c.with_time(t as u64))
            .collect();
        let displacements = configs
            .windows(2)
            .map(|w| w[0].max_displacement(&w[1]))
            .collect();
        Ok(Self {
            params,
            schedule,
            seed: None,
            stop: StopReason::Horizon,
            displacements,
            configs,
            neighborhoods: None,
            matrices: None,
        })
    }

    pub fn n(&self) -> usize {
        self.configs[0].n()
    }

    pub fn dim(&self) -> usize {
        self.configs[0].dim()
    }

    /// Index of the last recorded configuration.
    pub fn last_step(&self) -> usize {
        self.configs.len() - 1
    }

    pub fn initial(&self) -> &TokenConfiguration {
        &self.configs[0]
    }

    pub fn last(&self) -> &TokenConfiguration {
        &self.configs[self.last_step()]
    }

    /// Sensitivity the declared dynamics uses at step `t` (0 for hardmax).
    pub fn delta_at(&self, t: usize) -> f64 {
        match self.params.kind() {
            DynamicsKind::Hardmax => 0.0,
            _ => self.schedule.at(t as u64),
        }
    }

    /// Neighborhoods of step `t`, from retained data or recomputed.
    pub fn neighborhoods_at(&self, t: usize) -> Result<Vec<Vec<usize>>> {
        if let Some(h) = self.neighborhoods.as_ref().and_then(|h| h.get(t)) {
            return Ok(h.clone());
        }
        if !self.params.kind().is_neighborhood_based() {
            return Err(CoreError::WrongDynamics("localmax or hardmax trajectory"));
        }
        neighborhoods_for(&self.configs[t], &self.params, self.delta_at(t))
    }

    /// Retained matrix chain, or an error naming the missing data.
    pub fn matrix_chain(&self) -> Result<&[TransitionMatrix]> {
        match &self.matrices {
            Some(m) if m.len() == self.last_step() => Ok(m),
            Some(m) => Err(CoreError::LengthMismatch {
                what: "retained matrices vs steps",
                left: m.len(),
                right: self.last_step(),
            }),
            None => Err(CoreError::MissingRetained("matrices")),
        }
    }

    /// First step whose recorded successor differs (bitwise) from a fresh
    /// replay of the declared dynamics, if any.
    pub fn replay_mismatch(&self) -> Result<Option<usize>> {
        for t in 0..self.last_step() {
            let (next, _) = advance(&self.configs[t], &self.params, &self.schedule, t as u64)?;
            if next.states() != self.configs[t + 1].states() {
                return Ok(Some(t));
            }
        }
        Ok(None)
    }
}

/// One step of the declared dynamics from `config` at step index `t`.
/// Returns the neighborhoods used when the dynamics is neighborhood-based.
pub fn advance(
    config: &TokenConfiguration,
    params: &ModelParams,
    schedule: &DeltaSchedule,
    t: u64,
) -> Result<(TokenConfiguration, Option<Vec<Vec<usize>>>)> {
    match params.kind() {
        DynamicsKind::Softmax(s) => {
            let next = softmax_step(config, params, s.beta.at(t, s.h), s.h)?;
            Ok((next, None))
        }
        kind => {
            let delta = if matches!(kind, DynamicsKind::Hardmax) {
                0.0
            } else {
                schedule.at(t)
            };
            let hoods = neighborhoods_for(config, params, delta)?;
            let next = apply_neighborhoods(config, params.alpha(), &hoods)?;
            Ok((next, Some(hoods)))
        }
    }
}

/// Iterates the declared dynamics from `init` for up to `horizon` steps.
///
/// Stops early when the max displacement of a step is `<= stop_tol`; a
/// `stop_tol` of zero disables early stopping. Softmax runs have no
/// neighborhoods or transition matrices, so retention flags are ignored for
/// them.
pub fn run(
    init: &TokenConfiguration,
    params: &ModelParams,
    schedule: &DeltaSchedule,
    horizon: u64,
    stop_tol: f64,
    retain: Retention,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(invalid("horizon", "must be >= 1"));
    }
    if !(stop_tol.is_finite() && stop_tol >= 0.0) {
        return Err(invalid(
            "stop_tol",
            format!("must be finite and >= 0, got {stop_tol}"),
        ));
    }
    params.check_dim(init.dim())?;
    let neighborhood_based = params.kind().is_neighborhood_based();
    let mut configs = vec![init.clone().with_time(0)];
    let mut displacements = Vec::new();
    let mut hoods_kept = (retain.neighborhoods && neighborhood_based).then(Vec::new);
    let mut mats_kept = (retain.matrices && neighborhood_based).then(Vec::new);
    let mut stop = StopReason::Horizon;
    for t in 0..horizon {
        let current = configs.last().expect("non-empty");
        let (next, hoods) = advance(current, params, schedule, t)?;
        let step = current.max_displacement(&next);
        if let (Some(keep), Some(h)) = (mats_kept.as_mut(), hoods.as_ref()) {
            keep.push(TransitionMatrix::from_neighborhoods(h, params.alpha(), t)?);
        }
        if let (Some(keep), Some(h)) = (hoods_kept.as_mut(), hoods) {
            keep.push(h);
        }
        displacements.push(step);
        configs.push(next);
        if stop_tol > 0.0 && step <= stop_tol {
            stop = StopReason::NumericallySettled;
            break;
        }
    }
    Ok(Trajectory {
        params: params.clone(),
        schedule: schedule.clone(),
        seed: None,
        stop,
        displacements,
        configs,
        neighborhoods: hoods_kept,
        matrices: mats_kept,
    })
}
