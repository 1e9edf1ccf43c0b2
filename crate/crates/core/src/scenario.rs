//! Run configurations and the named preset scenarios.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DEFAULT_GAMMA_FACTOR, DEFAULT_WINDOW_FRACTION};
use crate::error::{invalid, CoreError, Result};
use crate::params::{
    BetaSchedule, DeltaSchedule, DynamicsKind, Interaction, ModelParams, SoftmaxSettings,
};
use crate::sampling::{uniform_box, uniform_rect};
use crate::state::TokenConfiguration;
use crate::trajectory::{run, Retention, Trajectory};

/// One group of initial tokens.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Block {
    Points {
        points: Vec<Vec<f64>>,
    },
    /// `count` tokens uniform in the box with per-axis bounds `lo[k]..hi[k]`.
    Uniform {
        count: usize,
        lo: Vec<f64>,
        hi: Vec<f64>,
        seed: u64,
    },
}

/// How the initial configuration is built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// `n` tokens uniform in `[lo, hi]^d`.
    Box {
        lo: f64,
        hi: f64,
        seed: u64,
    },
    Points {
        points: Vec<Vec<f64>>,
    },
    /// Blocks concatenated in order.
    Blocks {
        blocks: Vec<Block>,
    },
}

impl InitSpec {
    /// Seed of the first random block, if any.
    pub fn seed(&self) -> Option<u64> {
        match self {
            InitSpec::Box { seed, .. } => Some(*seed),
            InitSpec::Points { .. } => None,
            InitSpec::Blocks { blocks } => blocks.iter().find_map(|b| match b {
                Block::Uniform { seed, .. } => Some(*seed),
                Block::Points { .. } => None,
            }),
        }
    }

    /// Replaces the seed of every random block.
    pub fn reseed(&mut self, new_seed: u64) {
        match self {
            InitSpec::Box { seed, .. } => *seed = new_seed,
            InitSpec::Points { .. } => {}
            InitSpec::Blocks { blocks } => {
                for b in blocks {
                    if let Block::Uniform { seed, .. } = b {
                        *seed = new_seed;
                    }
                }
            }
        }
    }

    pub fn build(&self, n: usize, d: usize) -> Result<TokenConfiguration> {
        let config = match self {
            InitSpec::Box { lo, hi, seed } => uniform_box(n, d, *lo, *hi, *seed)?,
            InitSpec::Points { points } => TokenConfiguration::from_rows(points, 0)?,
            InitSpec::Blocks { blocks } => {
                let mut rows: Vec<Vec<f64>> = Vec::new();
                for b in blocks {
                    match b {
                        Block::Points { points } => rows.extend(points.iter().cloned()),
                        Block::Uniform {
                            count,
                            lo,
                            hi,
                            seed,
                        } => {
                            if lo.len() != d || hi.len() != d {
                                return Err(invalid(
                                    "init.blocks.lo",
                                    format!("bounds must have {d} entries"),
                                ));
                            }
                            let ranges: Vec<(f64, f64)> =
                                lo.iter().copied().zip(hi.iter().copied()).collect();
                            rows.extend(uniform_rect(*count, &ranges, *seed)?.to_rows());
                        }
                    }
                }
                TokenConfiguration::from_rows(&rows, 0)?
            }
        };
        if config.n() != n {
            return Err(invalid(
                "n",
                format!("init produces {} tokens, config says {n}", config.n()),
            ));
        }
        if config.dim() != d {
            return Err(invalid(
                "d",
                format!("init produces dimension {}, config says {d}", config.dim()),
            ));
        }
        Ok(config)
    }
}

/// Diagnostics run by `analyze`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    HullMonotonicity,
    AlignmentSet,
    LimitClassification,
    Quiescence,
    Contraction,
    TailSplit,
    DiffMax,
    NormGrowth,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::HullMonotonicity,
        Check::AlignmentSet,
        Check::LimitClassification,
        Check::Quiescence,
        Check::Contraction,
        Check::TailSplit,
        Check::DiffMax,
        Check::NormGrowth,
    ];
}

/// Terminal vector of the backward APS recursion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terminal {
    #[default]
    Uniform,
    Random {
        seed: u64,
    },
}

/// Smallest default S1/S2 threshold, used when the sensitivity at the
/// horizon is zero (hardmax) or has vanished.
pub const MIN_DEFAULT_GAMMA: f64 = 1e-9;

/// Default simplification tolerance of the final-hull proxy.
pub const DEFAULT_PROXY_TOL: f64 = 1e-6;

/// Default distance to S below which a token counts as converged into S.
pub const DEFAULT_LIMIT_EPSILON: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSettings {
    pub checks: Vec<Check>,
    /// Vertices within this distance of their neighbours' segment are
    /// dropped from the final hull when it stands in for K.
    pub proxy_tol: f64,
    /// Tolerance of the `||x||^2 = max <x, v_k>` test.
    pub alignment_tol: f64,
    pub hull_tol: f64,
    /// Radius of limit classification.
    pub epsilon: f64,
    /// S1/S2 threshold; `DEFAULT_GAMMA_FACTOR * delta(last)` when absent,
    /// floored at `MIN_DEFAULT_GAMMA`.
    pub gamma: Option<f64>,
    /// Tail window as a fraction of the steps.
    pub window: f64,
    pub terminal: Terminal,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            checks: Check::ALL.to_vec(),
            proxy_tol: DEFAULT_PROXY_TOL,
            alignment_tol: crate::geometry::DEFAULT_ALIGNMENT_TOL,
            hull_tol: crate::diagnostics::HULL_TOL,
            epsilon: DEFAULT_LIMIT_EPSILON,
            gamma: None,
            window: DEFAULT_WINDOW_FRACTION,
            terminal: Terminal::Uniform,
        }
    }
}

impl AnalysisSettings {
    pub fn gamma_for(&self, delta: f64) -> f64 {
        self.gamma
            .unwrap_or((DEFAULT_GAMMA_FACTOR * delta).max(MIN_DEFAULT_GAMMA))
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &'static str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(
                    name,
                    format!("must be nonnegative and finite, got {v}"),
                ))
            }
        };
        nonneg("analyses.proxy_tol", self.proxy_tol)?;
        nonneg("analyses.alignment_tol", self.alignment_tol)?;
        nonneg("analyses.hull_tol", self.hull_tol)?;
        nonneg("analyses.epsilon", self.epsilon)?;
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(invalid(
                    "analyses.gamma",
                    format!("must be positive, got {g}"),
                ));
            }
        }
        if !(self.window > 0.0 && self.window <= 1.0) {
            return Err(invalid(
                "analyses.window",
                format!("must be in (0, 1], got {}", self.window),
            ));
        }
        Ok(())
    }
}

fn default_dynamics() -> DynamicsKind {
    DynamicsKind::Localmax
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    #[serde(default = "default_dynamics")]
    pub dynamics: DynamicsKind,
    #[serde(default)]
    pub interaction: Interaction,
    pub schedule: DeltaSchedule,
    pub init: InitSpec,
    pub horizon: u64,
    #[serde(default)]
    pub stop_tol: f64,
    #[serde(default)]
    pub retain: Retention,
    #[serde(default, skip_serializing_if = "is_default")]
    pub analyses: AnalysisSettings,
}

impl RunConfig {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.alpha, self.interaction.clone(), self.dynamics)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", "must be positive"));
        }
        if self.d == 0 {
            return Err(invalid("d", "must be positive"));
        }
        self.params()?;
        if let Some(k) = self.interaction.dim() {
            if k != self.d {
                return Err(invalid(
                    "interaction",
                    format!("matrix is {k}x{k}, expected {0}x{0}", self.d),
                ));
            }
        }
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if !(self.stop_tol >= 0.0 && self.stop_tol.is_finite()) {
            return Err(invalid(
                "stop_tol",
                format!("must be nonnegative, got {}", self.stop_tol),
            ));
        }
        self.analyses.validate()?;
        self.init.build(self.n, self.d).map(|_| ())
    }

    pub fn initial(&self) -> Result<TokenConfiguration> {
        self.init.build(self.n, self.d)
    }

    pub fn seed(&self) -> Option<u64> {
        self.init.seed()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.init.reseed(seed);
        self
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_retention(mut self, retain: Retention) -> Self {
        self.retain = retain;
        self
    }

    pub fn run(&self) -> Result<Trajectory> {
        self.validate()?;
        let mut t = run(
            &self.initial()?,
            &self.params()?,
            &self.schedule,
            self.horizon,
            self.stop_tol,
            self.retain,
        )?;
        t.seed = self.seed();
        Ok(t)
    }
}

/// Named, frozen run configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Figure2Localmax,
    Figure2Hardmax,
    Figure2Softmax,
    Remark33,
    Figure56,
    VanishingDelta,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Figure2Localmax,
        Preset::Figure2Hardmax,
        Preset::Figure2Softmax,
        Preset::Remark33,
        Preset::Figure56,
        Preset::VanishingDelta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Figure2Localmax => "figure2-localmax",
            Preset::Figure2Hardmax => "figure2-hardmax",
            Preset::Figure2Softmax => "figure2-softmax",
            Preset::Remark33 => "remark33",
            Preset::Figure56 => "figure56",
            Preset::VanishingDelta => "vanishing-delta",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| CoreError::InvalidParameter {
                name: "preset",
                reason: format!(
                    "unknown preset {name:?}; expected one of {}",
                    Self::ALL.map(|p| p.name()).join(", ")
                ),
            })
    }

    pub fn config(self) -> RunConfig {
        match self {
            Preset::Figure2Localmax => figure2(DynamicsKind::Localmax),
            Preset::Figure2Hardmax => figure2(DynamicsKind::Hardmax),
            Preset::Figure2Softmax => figure2(DynamicsKind::Softmax(SoftmaxSettings {
                h: 0.1,
                beta: BetaSchedule::Exponential { cap: 1e8 },
            })),
            Preset::Remark33 => remark33(),
            Preset::Figure56 => RunConfig {
                n: 25,
                d: 2,
                alpha: 0.1,
                dynamics: DynamicsKind::Localmax,
                interaction: Interaction::Identity,
                schedule: DeltaSchedule::Constant { delta: 0.4 },
                init: InitSpec::Box {
                    lo: -1.0,
                    hi: 1.0,
                    seed: 0,
                },
                horizon: FIGURE56_HORIZON,
                stop_tol: 0.0,
                retain: Retention::ALL,
                analyses: AnalysisSettings::default(),
            },
            Preset::VanishingDelta => RunConfig {
                n: 25,
                d: 2,
                alpha: 0.1,
                dynamics: DynamicsKind::Localmax,
                interaction: Interaction::Identity,
                schedule: DeltaSchedule::Geometric {
                    delta0: 0.4,
                    ratio: 0.95,
                },
                init: InitSpec::Box {
                    lo: -1.0,
                    hi: 1.0,
                    seed: 0,
                },
                horizon: 2000,
                stop_tol: 0.0,
                retain: Retention {
                    neighborhoods: true,
                    matrices: false,
                },
                analyses: AnalysisSettings {
                    gamma: Some(0.01),
                    ..AnalysisSettings::default()
                },
            },
        }
    }
}

/// Steps of the figure56 preset.
pub const FIGURE56_HORIZON: u64 = 400;

/// Horizon of the remark33 preset.
pub const REMARK33_HORIZON: u64 = 2000;

/// Step size parameter of the remark33 preset.
pub const REMARK33_ALPHA: f64 = 0.2;

fn figure2(kind: DynamicsKind) -> RunConfig {
    RunConfig {
        n: 30,
        d: 2,
        alpha: 0.2,
        dynamics: kind,
        interaction: Interaction::Identity,
        schedule: DeltaSchedule::Constant { delta: 0.3 },
        init: InitSpec::Box {
            lo: -1.0,
            hi: 1.0,
            seed: 0,
        },
        horizon: 100,
        stop_tol: 0.0,
        retain: if kind.is_neighborhood_based() {
            Retention::ALL
        } else {
            Retention::default()
        },
        analyses: AnalysisSettings::default(),
    }
}

fn remark33() -> RunConfig {
    RunConfig {
        n: 13,
        d: 2,
        alpha: REMARK33_ALPHA,
        dynamics: DynamicsKind::Localmax,
        interaction: Interaction::Identity,
        schedule: DeltaSchedule::Constant { delta: 8.0 },
        init: InitSpec::Blocks {
            blocks: vec![
                Block::Points {
                    points: vec![vec![-10.0, 1.0], vec![11.0, 1.0], vec![0.0, -15.0]],
                },
                Block::Uniform {
                    count: 9,
                    lo: vec![-0.05, 0.95],
                    hi: vec![0.05, 1.05],
                    seed: 0,
                },
                Block::Points {
                    points: vec![vec![-0.9, 1.1]],
                },
            ],
        },
        horizon: REMARK33_HORIZON,
        stop_tol: 0.0,
        retain: Retention::ALL,
        analyses: AnalysisSettings::default(),
    }
}
