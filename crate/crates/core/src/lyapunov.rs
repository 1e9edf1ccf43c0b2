//! Absolute probability sequences over the realized chain of transition
//! matrices, the weighted dispersion `V(t) = sum_i pi_i ||x_i - pi^T x||^2`
//! and its exact decrement.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::diagnostics::TailClassification;
use crate::dynamics::TransitionMatrix;
use crate::error::{invalid, CoreError, Result};
use crate::sampling::UniformStream;
use crate::state::{dist_sq, TokenConfiguration};
use crate::trajectory::Trajectory;

/// Allowed deviation of a probability vector's sum from 1.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Sum drift beyond which a backward step renormalizes.
const RENORM_TOL: f64 = 1e-13;

/// Nonnegative weights summing to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector {
    weights: Vec<f64>,
}

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = CoreError;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(p: ProbabilityVector) -> Self {
        p.weights
    }
}

impl ProbabilityVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(CoreError::EmptyInput);
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(invalid(
                "pi",
                format!("weights must be finite and nonnegative, got {w}"),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(invalid("pi", format!("weights sum to {sum:.17}")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::EmptyInput);
        }
        Ok(Self {
            weights: vec![1.0 / n as f64; n],
        })
    }

    /// Normalized independent uniform draws from the seeded stream.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::EmptyInput);
        }
        let mut stream = UniformStream::new(seed);
        let raw: Vec<f64> = (0..n).map(|_| stream.next_in(0.5, 1.5)).collect();
        let sum: f64 = raw.iter().sum();
        Ok(Self {
            weights: raw.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Total weight on `tokens`.
    pub fn mass(&self, tokens: &[usize]) -> f64 {
        // Folding from +0 keeps the empty mass at +0 (`sum` gives -0).
        tokens.iter().fold(0.0, |m, &i| m + self.weights[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalKind {
    Uniform,
    Custom,
}

/// `vectors[t]` is `pi(t)` for `t = 0..=chain.len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsoluteProbabilitySequence {
    pub vectors: Vec<ProbabilityVector>,
    pub terminal_kind: TerminalKind,
}

impl AbsoluteProbabilitySequence {
    pub fn at(&self, t: usize) -> &ProbabilityVector {
        &self.vectors[t]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Largest `|pi_j(t) - sum_i pi_i(t+1) A_ij(t)|` over the chain.
    pub fn defining_residual(&self, chain: &[TransitionMatrix]) -> Result<f64> {
        if chain.len() + 1 != self.vectors.len() {
            return Err(CoreError::LengthMismatch {
                what: "probability vectors vs matrices + 1",
                left: self.vectors.len(),
                right: chain.len() + 1,
            });
        }
        let mut worst: f64 = 0.0;
        for (t, a) in chain.iter().enumerate() {
            let next = transpose_apply(a, &self.vectors[t + 1].weights);
            for (x, y) in next.iter().zip(&self.vectors[t].weights) {
                worst = worst.max((x - y).abs());
            }
        }
        Ok(worst)
    }
}

/// `A^T p`.
fn transpose_apply(a: &TransitionMatrix, p: &[f64]) -> Vec<f64> {
    let n = a.n();
    let mut out = vec![0.0; n];
    for (i, &pi) in p.iter().enumerate() {
        if pi == 0.0 {
            continue;
        }
        for (o, &aij) in out.iter_mut().zip(a.row(i)) {
            *o += pi * aij;
        }
    }
    out
}

/// Runs `pi(t) = A(t)^T pi(t+1)` backwards from `pi(chain.len()) = terminal`.
pub fn backward_aps(
    chain: &[TransitionMatrix],
    terminal: ProbabilityVector,
) -> Result<AbsoluteProbabilitySequence> {
    if chain.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    let n = terminal.len();
    let terminal_kind = if terminal == ProbabilityVector::uniform(n)? {
        TerminalKind::Uniform
    } else {
        TerminalKind::Custom
    };
    let mut vectors = vec![terminal];
    for a in chain.iter().rev() {
        a.validate()?;
        if a.n() != n {
            return Err(CoreError::DimensionMismatch {
                expected: n,
                found: a.n(),
            });
        }
        let mut p = transpose_apply(a, &vectors.last().expect("nonempty").weights);
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > RENORM_TOL {
            p.iter_mut().for_each(|w| *w /= sum);
        }
        vectors.push(ProbabilityVector::new(p)?);
    }
    vectors.reverse();
    Ok(AbsoluteProbabilitySequence {
        vectors,
        terminal_kind,
    })
}

fn check_len(what: &'static str, left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(CoreError::LengthMismatch { what, left, right })
    }
}

/// `V = sum_i pi_i ||x_i - pi^T x||^2`.
pub fn lyapunov_v(config: &TokenConfiguration, pi: &ProbabilityVector) -> Result<f64> {
    check_len("pi vs tokens", pi.len(), config.n())?;
    let mut mean = vec![0.0; config.dim()];
    for (row, &w) in config.rows().zip(pi.weights()) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += w * x;
        }
    }
    Ok(config
        .rows()
        .zip(pi.weights())
        .map(|(row, &w)| w * dist_sq(row, &mean))
        .sum())
}

/// `H = A^T diag(pi_next) A`.
pub fn h_matrix(a: &TransitionMatrix, pi_next: &ProbabilityVector) -> Result<DMatrix<f64>> {
    check_len("pi vs matrix", pi_next.len(), a.n())?;
    let n = a.n();
    let mut h = DMatrix::zeros(n, n);
    for (k, &p) in pi_next.weights().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let row = a.row(k);
        for (i, &aki) in row.iter().enumerate() {
            if aki == 0.0 {
                continue;
            }
            for (j, &akj) in row.iter().enumerate() {
                h[(i, j)] += p * aki * akj;
            }
        }
    }
    Ok(h)
}

/// `A_ki A_kj` from the neighborhood `C_k` alone:
///
/// * `i = j = k`: `(1/(1+alpha) + [k in C_k] w)^2`
/// * `i = k != j`, `j in C_k`: `(1/(1+alpha) + [k in C_k] w) w`
/// * `j = k != i`, `i in C_k`: `w (1/(1+alpha) + [k in C_k] w)`
/// * `i, j != k`, both in `C_k`: `w^2`
/// * otherwise 0,
///
/// where `w = alpha/(1+alpha) / |C_k|`.
pub fn case_table_entry(k: usize, i: usize, j: usize, hood: &[usize], alpha: f64) -> f64 {
    let keep = 1.0 / (1.0 + alpha);
    let w = alpha / (1.0 + alpha) / hood.len() as f64;
    let member = |x: usize| hood.contains(&x);
    let diag = if member(k) { keep + w } else { keep };
    match (i == k, j == k) {
        (true, true) => diag * diag,
        (true, false) if member(j) => diag * w,
        (false, true) if member(i) => w * diag,
        (false, false) if member(i) && member(j) => w * w,
        _ => 0.0,
    }
}

/// `V(t)` along a run and the two sides of the decrement identity
/// `V(t) - V(t+1) = 1/2 sum_ij H_ij(t) ||x_i(t) - x_j(t)||^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecrementSeries {
    pub v: Vec<f64>,
    pub decrement: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl DecrementSeries {
    /// Largest `residual(t) / (1 + |V(t)|)`.
    pub fn max_relative_residual(&self) -> f64 {
        self.residuals
            .iter()
            .zip(&self.v)
            .map(|(r, v)| r / (1.0 + v.abs()))
            .fold(0.0, f64::max)
    }

    /// Steps where `V` grew by more than `slack`.
    pub fn increases(&self, slack: f64) -> Vec<usize> {
        self.decrement
            .iter()
            .enumerate()
            .filter(|(_, d)| **d < -slack)
            .map(|(t, _)| t)
            .collect()
    }
}

fn dissipation(
    config: &TokenConfiguration,
    a: &TransitionMatrix,
    pi_next: &ProbabilityVector,
) -> Result<f64> {
    let h = h_matrix(a, pi_next)?;
    let n = config.n();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && h[(i, j)] != 0.0 {
                sum += h[(i, j)] * dist_sq(config.row(i), config.row(j));
            }
        }
    }
    Ok(0.5 * sum)
}

fn check_aligned(trajectory: &Trajectory, aps: &AbsoluteProbabilitySequence) -> Result<()> {
    check_len(
        "probability vectors vs configurations",
        aps.len(),
        trajectory.configs.len(),
    )?;
    check_len("pi vs tokens", aps.at(0).len(), trajectory.n())
}

/// Evaluates both sides of the decrement identity at every step.
pub fn decrement_identity(
    trajectory: &Trajectory,
    aps: &AbsoluteProbabilitySequence,
) -> Result<DecrementSeries> {
    check_aligned(trajectory, aps)?;
    let chain = trajectory.matrix_chain()?;
    let v = trajectory
        .configs
        .iter()
        .zip(&aps.vectors)
        .map(|(c, p)| lyapunov_v(c, p))
        .collect::<Result<Vec<_>>>()?;
    let mut decrement = Vec::with_capacity(chain.len());
    let mut dissipations = Vec::with_capacity(chain.len());
    let mut residuals = Vec::with_capacity(chain.len());
    for (t, a) in chain.iter().enumerate() {
        let lhs = v[t] - v[t + 1];
        let rhs = dissipation(&trajectory.configs[t], a, aps.at(t + 1))?;
        decrement.push(lhs);
        dissipations.push(rhs);
        residuals.push((lhs - rhs).abs());
    }
    Ok(DecrementSeries {
        v,
        decrement,
        dissipation: dissipations,
        residuals,
    })
}

/// APS mass on S1 and S2 over time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassSplit {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    /// Largest `W2(t)` over the classification window.
    pub s2_mass_tail: f64,
    /// Whether `s2_mass_tail < S2_COLLAPSE_TOL`.
    pub s2_collapsed: bool,
}

pub const S2_COLLAPSE_TOL: f64 = 1e-6;

pub fn mass_split(
    aps: &AbsoluteProbabilitySequence,
    class: &TailClassification,
) -> Result<MassSplit> {
    check_len("classification vs pi", class.n(), aps.at(0).len())?;
    let w2: Vec<f64> = aps.vectors.iter().map(|p| p.mass(&class.s2)).collect();
    let w1: Vec<f64> = aps.vectors.iter().map(|p| p.mass(&class.s1)).collect();
    let end = class.window.end.min(aps.len() - 1);
    let s2_mass_tail = w2
        .get(class.window.start..=end)
        .unwrap_or(&[])
        .iter()
        .copied()
        .fold(0.0, f64::max);
    Ok(MassSplit {
        w1,
        w2,
        s2_mass_tail,
        s2_collapsed: s2_mass_tail < S2_COLLAPSE_TOL,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub t: usize,
    pub decrement: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    /// Steps with `V(t) - V(t+1) < a^2/(2n^2) sum_k d_k(t)^2 pi_k(t+1)`.
    pub diameter_bound: Vec<BoundViolation>,
    /// Steps with `V(t) - V(t+1) < a^2 gamma^2/(2n^2) W2(t+1)`.
    pub s2_bound: Vec<BoundViolation>,
    /// Steps where every S2 weight of `pi(t)` is positive, so `W2` must
    /// strictly increase from `t` to `t+1`.
    pub w2_checked: usize,
    /// Of those, the steps where it did not.
    pub w2_not_increasing: Vec<usize>,
}

impl LowerBoundReport {
    pub fn holds(&self) -> bool {
        self.diameter_bound.is_empty() && self.s2_bound.is_empty()
    }
}

/// Checks both decrease estimates on the steps `t -> t+1` inside the
/// classification window, with `a = alpha/(1+alpha)`.
pub fn lyapunov_lower_bound_check(
    trajectory: &Trajectory,
    aps: &AbsoluteProbabilitySequence,
    class: &TailClassification,
    gamma: f64,
    slack: f64,
) -> Result<LowerBoundReport> {
    check_aligned(trajectory, aps)?;
    class.window.check(trajectory)?;
    let n = trajectory.n();
    let alpha = trajectory.params.alpha();
    let a = alpha / (1.0 + alpha);
    let scale = a * a / (2.0 * (n * n) as f64);
    let mut report = LowerBoundReport::default();
    for t in class.window.start..class.window.end {
        let (now, next) = (&trajectory.configs[t], &trajectory.configs[t + 1]);
        let (p_now, p_next) = (aps.at(t), aps.at(t + 1));
        let decrement = lyapunov_v(now, p_now)? - lyapunov_v(next, p_next)?;
        let hoods = trajectory.neighborhoods_at(t)?;
        let weighted: f64 = hoods
            .iter()
            .zip(p_next.weights())
            .map(|(hood, &p)| {
                let d = crate::diagnostics::hood_diameter(now, hood);
                d * d * p
            })
            .sum();
        let bound = scale * weighted;
        if decrement < bound - slack {
            report.diameter_bound.push(BoundViolation {
                t,
                decrement,
                bound,
            });
        }
        let w2_next = p_next.mass(&class.s2);
        let bound = scale * gamma * gamma * w2_next;
        if decrement < bound - slack {
            report.s2_bound.push(BoundViolation {
                t,
                decrement,
                bound,
            });
        }
        if !class.s2.is_empty() && class.s2.iter().all(|&i| p_now.weights()[i] > 0.0) {
            report.w2_checked += 1;
            if p_now.mass(&class.s2) >= w2_next {
                report.w2_not_increasing.push(t);
            }
        }
    }
    Ok(report)
}

/// Everything the Lyapunov analysis reports for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub terminal_kind: TerminalKind,
    pub v: Vec<f64>,
    pub decrement_residuals: Vec<f64>,
    pub max_relative_residual: f64,
    pub aps_residual: f64,
    /// Steps where `V` grew by more than the slack.
    pub increases: Vec<usize>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub s2_mass_tail: f64,
    pub s2_collapsed: bool,
    pub lower_bounds: LowerBoundReport,
}

/// Builds the APS from `terminal` over the retained chain and runs every
/// check against `class`.
pub fn lyapunov_report(
    trajectory: &Trajectory,
    terminal: ProbabilityVector,
    class: &TailClassification,
    slack: f64,
) -> Result<LyapunovReport> {
    let chain = trajectory.matrix_chain()?;
    let aps = backward_aps(chain, terminal)?;
    let series = decrement_identity(trajectory, &aps)?;
    let split = mass_split(&aps, class)?;
    let lower_bounds = lyapunov_lower_bound_check(trajectory, &aps, class, class.gamma, slack)?;
    Ok(LyapunovReport {
        terminal_kind: aps.terminal_kind,
        max_relative_residual: series.max_relative_residual(),
        aps_residual: aps.defining_residual(chain)?,
        increases: series.increases(slack),
        v: series.v,
        decrement_residuals: series.residuals,
        w1: split.w1,
        w2: split.w2,
        s2_mass_tail: split.s2_mass_tail,
        s2_collapsed: split.s2_collapsed,
        lower_bounds,
    })
}
