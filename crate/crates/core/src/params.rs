//! Model parameters: update weight, interaction matrix, dynamics kind and the
//! alignment-sensitivity schedule.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CoreError, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// The matrix `A` in `<A x_i, x_j>`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInteraction", into = "RawInteraction")]
pub enum Interaction {
    #[default]
    Identity,
    Matrix(SpdMatrix),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawInteraction {
    Identity,
    Matrix(Vec<Vec<f64>>),
}

impl TryFrom<RawInteraction> for Interaction {
    type Error = CoreError;

    fn try_from(raw: RawInteraction) -> Result<Self> {
        match raw {
            RawInteraction::Identity => Ok(Interaction::Identity),
            RawInteraction::Matrix(rows) => SpdMatrix::from_rows(&rows).map(Interaction::Matrix),
        }
    }
}

impl From<Interaction> for RawInteraction {
    fn from(i: Interaction) -> Self {
        match i {
            Interaction::Identity => RawInteraction::Identity,
            Interaction::Matrix(m) => RawInteraction::Matrix(m.to_rows()),
        }
    }
}

/// Symmetric positive definite `d x d` matrix, validated at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix {
    d: usize,
    entries: Vec<f64>,
    /// Lower Cholesky factor `L` with `A = L L^T`, row-major.
    lower: Vec<f64>,
}

impl SpdMatrix {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return Err(invalid("interaction", "matrix must be non-empty"));
        }
        let mut entries = Vec::with_capacity(d * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(invalid(
                    "interaction",
                    format!("matrix must be square ({d} x {d})"),
                ));
            }
            entries.extend_from_slice(r);
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(invalid("interaction", "entries must be finite"));
        }
        for i in 0..d {
            for j in 0..i {
                if (entries[i * d + j] - entries[j * d + i]).abs() > SYMMETRY_TOL {
                    return Err(invalid(
                        "interaction",
                        format!("not symmetric at ({i}, {j})"),
                    ));
                }
            }
        }
        let m = DMatrix::from_row_slice(d, d, &entries);
        let sym = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym.clone());
        let min_eig = eig.eigenvalues.min();
        if min_eig <= 0.0 {
            return Err(invalid(
                "interaction",
                format!("not positive definite (smallest eigenvalue {min_eig:e})"),
            ));
        }
        let chol = sym
            .cholesky()
            .ok_or_else(|| invalid("interaction", "Cholesky factorization failed"))?;
        let l = chol.l();
        let lower = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| l[(i, j)])
            .collect();
        Ok(Self { d, entries, lower })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.d + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .chunks_exact(self.d)
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Lower Cholesky factor as rows.
    pub fn cholesky_lower(&self) -> Vec<Vec<f64>> {
        self.lower
            .chunks_exact(self.d)
            .map(<[f64]>::to_vec)
            .collect()
    }
}

impl Interaction {
    /// Dimension constraint, `None` for the identity (any dimension).
    pub fn dim(&self) -> Option<usize> {
        match self {
            Interaction::Identity => None,
            Interaction::Matrix(m) => Some(m.dim()),
        }
    }

    /// Writes `A x` into `out`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Interaction::Identity => out.copy_from_slice(x),
            Interaction::Matrix(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..m.d).map(|j| m.get(i, j) * x[j]).sum();
                }
            }
        }
    }

    /// Writes `L^T x` into `out`, so that `<A x, y> = <L^T x, L^T y>`.
    pub fn apply_whitening(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Interaction::Identity => out.copy_from_slice(x),
            Interaction::Matrix(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (i..m.d).map(|j| m.lower[j * m.d + i] * x[j]).sum();
                }
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Interaction::Identity)
    }
}

/// Inverse-temperature schedule for the discretized softmax dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaSchedule {
    Constant {
        beta: f64,
    },
    /// `beta(t) = min(exp(2 t h), cap)` with `t` the step index, i.e. the
    /// rescaled-token factor evaluated at continuous time `t h`.
    Exponential {
        cap: f64,
    },
}

impl BetaSchedule {
    pub fn at(&self, step: u64, h: f64) -> f64 {
        match *self {
            BetaSchedule::Constant { beta } => beta,
            BetaSchedule::Exponential { cap } => (2.0 * step as f64 * h).exp().min(cap),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxSettings {
    /// Explicit Euler step.
    pub h: f64,
    pub beta: BetaSchedule,
}

impl Default for SoftmaxSettings {
    fn default() -> Self {
        Self {
            h: 0.1,
            beta: BetaSchedule::Exponential { cap: 1e8 },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DynamicsKind {
    Localmax,
    Hardmax,
    Softmax(SoftmaxSettings),
}

impl DynamicsKind {
    pub fn name(&self) -> &'static str {
        match self {
            DynamicsKind::Localmax => "localmax",
            DynamicsKind::Hardmax => "hardmax",
            DynamicsKind::Softmax(_) => "softmax",
        }
    }

    /// Localmax and hardmax share the neighborhood/transition-matrix machinery.
    pub fn is_neighborhood_based(&self) -> bool {
        !matches!(self, DynamicsKind::Softmax(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelParams", into = "RawModelParams")]
pub struct ModelParams {
    alpha: f64,
    interaction: Interaction,
    kind: DynamicsKind,
}

#[derive(Serialize, Deserialize)]
struct RawModelParams {
    alpha: f64,
    interaction: Interaction,
    dynamics: DynamicsKind,
}

impl TryFrom<RawModelParams> for ModelParams {
    type Error = CoreError;

    fn try_from(raw: RawModelParams) -> Result<Self> {
        ModelParams::new(raw.alpha, raw.interaction, raw.dynamics)
    }
}

impl From<ModelParams> for RawModelParams {
    fn from(p: ModelParams) -> Self {
        RawModelParams {
            alpha: p.alpha,
            interaction: p.interaction,
            dynamics: p.kind,
        }
    }
}

impl ModelParams {
    pub fn new(alpha: f64, interaction: Interaction, kind: DynamicsKind) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(invalid(
                "alpha",
                format!("must be finite and > 0, got {alpha}"),
            ));
        }
        if let DynamicsKind::Softmax(s) = &kind {
            if !(s.h.is_finite() && s.h > 0.0) {
                return Err(invalid("h", format!("must be finite and > 0, got {}", s.h)));
            }
            let ok = match s.beta {
                BetaSchedule::Constant { beta } => beta.is_finite() && beta > 0.0,
                BetaSchedule::Exponential { cap } => cap.is_finite() && cap >= 1.0,
            };
            if !ok {
                return Err(invalid(
                    "beta",
                    "constant beta must be > 0; exponential cap must be >= 1",
                ));
            }
        }
        Ok(Self {
            alpha,
            interaction,
            kind,
        })
    }

    pub fn localmax(alpha: f64) -> Result<Self> {
        Self::new(alpha, Interaction::Identity, DynamicsKind::Localmax)
    }

    pub fn hardmax(alpha: f64) -> Result<Self> {
        Self::new(alpha, Interaction::Identity, DynamicsKind::Hardmax)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn interaction(&self) -> &Interaction {
        &self.interaction
    }

    pub fn kind(&self) -> &DynamicsKind {
        &self.kind
    }

    pub fn with_kind(mut self, kind: DynamicsKind) -> Result<Self> {
        self.kind = kind;
        Self::new(self.alpha, self.interaction, self.kind)
    }

    pub fn with_interaction(mut self, interaction: Interaction) -> Self {
        self.interaction = interaction;
        self
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        match self.interaction.dim() {
            Some(k) if k != d => Err(CoreError::DimensionMismatch {
                expected: k,
                found: d,
            }),
            _ => Ok(()),
        }
    }
}

/// Alignment sensitivity `delta(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub enum DeltaSchedule {
    Constant {
        delta: f64,
    },
    /// `delta0 * ratio^t`
    Geometric {
        delta0: f64,
        ratio: f64,
    },
    /// `delta0 / (1 + t)^exponent`
    Power {
        delta0: f64,
        exponent: f64,
    },
    /// Explicit values, extended by the last one.
    Table {
        values: Vec<f64>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawSchedule {
    Constant { delta: f64 },
    Geometric { delta0: f64, ratio: f64 },
    Power { delta0: f64, exponent: f64 },
    Table { values: Vec<f64> },
}

impl TryFrom<RawSchedule> for DeltaSchedule {
    type Error = CoreError;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        match raw {
            RawSchedule::Constant { delta } => DeltaSchedule::constant(delta),
            RawSchedule::Geometric { delta0, ratio } => DeltaSchedule::geometric(delta0, ratio),
            RawSchedule::Power { delta0, exponent } => DeltaSchedule::power(delta0, exponent),
            RawSchedule::Table { values } => DeltaSchedule::table(values),
        }
    }
}

impl From<DeltaSchedule> for RawSchedule {
    fn from(s: DeltaSchedule) -> Self {
        match s {
            DeltaSchedule::Constant { delta } => RawSchedule::Constant { delta },
            DeltaSchedule::Geometric { delta0, ratio } => RawSchedule::Geometric { delta0, ratio },
            DeltaSchedule::Power { delta0, exponent } => RawSchedule::Power { delta0, exponent },
            DeltaSchedule::Table { values } => RawSchedule::Table { values },
        }
    }
}

fn finite_nonneg(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and >= 0, got {v}")))
    }
}

fn finite_pos(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

impl DeltaSchedule {
    pub fn constant(delta: f64) -> Result<Self> {
        finite_nonneg("delta", delta)?;
        Ok(Self::Constant { delta })
    }

    pub fn geometric(delta0: f64, ratio: f64) -> Result<Self> {
        finite_pos("delta0", delta0)?;
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(invalid("ratio", format!("must lie in (0, 1), got {ratio}")));
        }
        Ok(Self::Geometric { delta0, ratio })
    }

    pub fn power(delta0: f64, exponent: f64) -> Result<Self> {
        finite_pos("delta0", delta0)?;
        finite_pos("exponent", exponent)?;
        Ok(Self::Power { delta0, exponent })
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("values", "table schedule needs at least one value"));
        }
        for &v in &values {
            finite_nonneg("values", v)?;
        }
        Ok(Self::Table { values })
    }

    pub fn at(&self, t: u64) -> f64 {
        match self {
            DeltaSchedule::Constant { delta } => *delta,
            DeltaSchedule::Geometric { delta0, ratio } => {
                delta0 * ratio.powi(t.min(i32::MAX as u64) as i32)
            }
            DeltaSchedule::Power { delta0, exponent } => delta0 / (1.0 + t as f64).powf(*exponent),
            DeltaSchedule::Table { values } => {
                let idx = usize::try_from(t)
                    .unwrap_or(usize::MAX)
                    .min(values.len() - 1);
                values[idx]
            }
        }
    }

    /// Whether `delta(t) -> 0`.
    pub fn is_vanishing(&self) -> bool {
        match self {
            DeltaSchedule::Constant { delta } => *delta == 0.0,
            DeltaSchedule::Geometric { .. } | DeltaSchedule::Power { .. } => true,
            DeltaSchedule::Table { values } => values.last() == Some(&0.0),
        }
    }
}
