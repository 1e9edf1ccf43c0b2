use std::path::Path;

use attnflow_core::diagnostics::{
    center_clearing, classify_tail, contraction_rate, diff_max_check, hull_monotonicity,
    limit_classification, norm_growth_check, proposition_checks, quiescence, theorem_epsilon,
    CrossingDirection, TailWindow,
};
use attnflow_core::geometry::{
    limiting_polytope, maximal_alignment_set, misaligned_vertices, points_of, AlignmentSet, Polygon,
};
use attnflow_core::scenario::{AnalysisSettings, Check};
use attnflow_core::Trajectory;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::io::{self, TrajectoryFile};
use crate::style;

pub const REPORT_FORMAT: &str = "attnflow-report/1";

/// Violation lists in the report are cut to this many entries.
const MAX_LISTED: usize = 100;

/// Command-line replacements for the stored analysis settings.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub gamma: Option<f64>,
    pub window: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Measured, with no claim that applies to this run.
    Info,
    /// Not applicable to this dynamics.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: Check,
    pub status: Status,
    pub detail: String,
    pub evidence: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub n: usize,
    pub steps: usize,
    pub dynamics: String,
    pub seed: Option<u64>,
    pub settings: AnalysisSettings,
    /// S1/S2 threshold actually used.
    pub gamma: f64,
    pub window: TailWindow,
    /// Final hull standing in for the limiting polytope K.
    pub polytope: Polygon,
    pub alignment_set: AlignmentSet,
    /// Tokens whose final position is farther than `settings.epsilon` from S.
    pub outside_s: Vec<usize>,
    pub checks: Vec<CheckResult>,
}

/// Stored settings of the run (or defaults) with `overrides` applied.
pub fn settings_for(file: &TrajectoryFile, overrides: &Overrides) -> CliResult<AnalysisSettings> {
    let mut s = file
        .config
        .as_ref()
        .map(|c| c.analyses.clone())
        .unwrap_or_default();
    if let Some(e) = overrides.epsilon {
        s.epsilon = e;
    }
    if overrides.gamma.is_some() {
        s.gamma = overrides.gamma;
    }
    if let Some(w) = overrides.window {
        s.window = w;
    }
    s.validate()?;
    Ok(s)
}

pub fn tail_window(trajectory: &Trajectory, settings: &AnalysisSettings) -> CliResult<TailWindow> {
    Ok(TailWindow::last_fraction(
        trajectory.last_step(),
        settings.window,
    )?)
}

fn listed<T: Serialize>(items: &[T]) -> Value {
    json!({
        "count": items.len(),
        "first": &items[..items.len().min(MAX_LISTED)],
    })
}

fn skipped(name: Check, why: &str) -> CheckResult {
    CheckResult {
        name,
        status: Status::Skipped,
        detail: why.to_string(),
        evidence: Value::Null,
    }
}

fn pass_if(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

struct Context<'a> {
    trajectory: &'a Trajectory,
    settings: &'a AnalysisSettings,
    k: Polygon,
    s: AlignmentSet,
    window: TailWindow,
    gamma: f64,
    delta_last: f64,
}

impl Context<'_> {
    fn neighborhood_based(&self) -> bool {
        self.trajectory.params.kind().is_neighborhood_based()
    }

    fn run(&self, check: Check) -> CliResult<CheckResult> {
        let t = self.trajectory;
        Ok(match check {
            Check::HullMonotonicity => {
                let v = hull_monotonicity(t, self.settings.hull_tol)?;
                CheckResult {
                    name: check,
                    status: pass_if(v.is_empty()),
                    detail: format!(
                        "{} hull escapes over {} steps at tol {:e}",
                        v.len(),
                        t.last_step(),
                        self.settings.hull_tol
                    ),
                    evidence: listed(&v),
                }
            }
            Check::AlignmentSet => {
                let bad = misaligned_vertices(&self.k, self.settings.alignment_tol);
                let distinct = self.s.has_distinct_index_sets();
                // Vertices of a limiting polytope are always aligned; a
                // misaligned one means the final hull has not converged yet.
                let status = if bad.is_empty() && distinct {
                    Status::Pass
                } else {
                    Status::Info
                };
                CheckResult {
                    name: check,
                    status,
                    detail: format!(
                        "|S| = {} on a {}-vertex hull; {} misaligned vertices{}",
                        self.s.len(),
                        self.k.vertices().len(),
                        bad.len(),
                        if status == Status::Pass {
                            ""
                        } else {
                            " (final hull not yet a limiting polytope)"
                        }
                    ),
                    evidence: json!({ "misaligned_vertices": bad, "distinct_index_sets": distinct }),
                }
            }
            Check::LimitClassification => {
                let r = limit_classification(t, &self.s, self.settings.epsilon)?;
                let outside = r.outside_count();
                // Convergence into S is only guaranteed for vanishing sensitivity.
                let status = match (outside, t.schedule.is_vanishing()) {
                    (0, _) => Status::Pass,
                    (_, true) => Status::Fail,
                    (_, false) => Status::Info,
                };
                CheckResult {
                    name: check,
                    status,
                    detail: format!(
                        "{outside} of {} tokens end farther than {} from S (max distance {:.3e})",
                        t.n(),
                        r.epsilon,
                        r.max_distance()
                    ),
                    evidence: serde_json::to_value(&r).unwrap_or(Value::Null),
                }
            }
            Check::Quiescence => {
                if !self.neighborhood_based() || self.delta_last <= 0.0 {
                    return Ok(skipped(
                        check,
                        "needs localmax dynamics with positive sensitivity",
                    ));
                }
                let eps = theorem_epsilon(t.params.alpha(), self.delta_last);
                let reports = self
                    .k
                    .vertices()
                    .iter()
                    .map(|&v| quiescence(t, v, eps, self.window.start))
                    .collect::<Result<Vec<_>, _>>()?;
                let exits = reports
                    .iter()
                    .flat_map(|r| &r.violations)
                    .filter(|c| c.direction == CrossingDirection::Out)
                    .count();
                let unsettled = reports.iter().filter(|r| r.settling_time.is_none()).count();
                CheckResult {
                    name: check,
                    status: pass_if(exits == 0),
                    detail: format!(
                        "eps = {eps:.3e}: {exits} exits from vertex balls in the tail window; {unsettled} of {} balls unsettled",
                        reports.len()
                    ),
                    evidence: serde_json::to_value(&reports).unwrap_or(Value::Null),
                }
            }
            Check::Contraction => {
                if !self.neighborhood_based() || self.delta_last <= 0.0 {
                    return Ok(skipped(
                        check,
                        "needs localmax dynamics with positive sensitivity",
                    ));
                }
                let eps = theorem_epsilon(t.params.alpha(), self.delta_last);
                let last = points_of(t.last())?;
                let mut fits = Vec::new();
                for &v in self.k.vertices() {
                    let cluster: Vec<usize> = (0..last.len())
                        .filter(|&i| last[i].dist(v) <= eps)
                        .collect();
                    if cluster.is_empty() {
                        continue;
                    }
                    let fit = contraction_rate(t, &cluster, self.window.start)?;
                    fits.push(json!({ "vertex": v, "cluster": cluster, "fit": fit }));
                }
                let expected = 1.0 / (1.0 + t.params.alpha());
                CheckResult {
                    name: check,
                    status: Status::Info,
                    detail: format!(
                        "{} vertex clusters fitted; isolated clusters contract at {expected:.10}",
                        fits.len()
                    ),
                    evidence: json!({ "expected_ratio": expected, "clusters": fits }),
                }
            }
            Check::TailSplit => {
                if !self.neighborhood_based() {
                    return Ok(skipped(check, "needs neighborhood-based dynamics"));
                }
                let class = classify_tail(t, self.gamma, self.window)?;
                let prop = proposition_checks(t, &class)?;
                CheckResult {
                    name: check,
                    status: pass_if(prop.holds()),
                    detail: format!(
                        "|S1| = {}, |S2| = {} at gamma = {:e}; max S1 distance to a vertex {:.3e}",
                        class.s1.len(),
                        class.s2.len(),
                        self.gamma,
                        class.max_s1_vertex_distance().unwrap_or(0.0)
                    ),
                    evidence: json!({
                        "s1": class.s1,
                        "s2": class.s2,
                        "max_s1_vertex_distance": class.max_s1_vertex_distance(),
                        "no_s1_neighbor": listed(&prop.no_s1_neighbor),
                        "s1_sees_s2": listed(&prop.s1_sees_s2),
                        "s2_influence": listed(&prop.s2_influence),
                    }),
                }
            }
            Check::DiffMax => {
                let v = diff_max_check(t, &self.k, self.window.start, self.settings.hull_tol)?;
                CheckResult {
                    name: check,
                    status: pass_if(v.is_empty()),
                    detail: format!("{} violations from step {}", v.len(), self.window.start),
                    evidence: listed(&v),
                }
            }
            Check::NormGrowth => {
                if !self.neighborhood_based() {
                    return Ok(skipped(check, "needs neighborhood-based dynamics"));
                }
                if !t.params.interaction().is_identity() {
                    return Ok(skipped(
                        check,
                        "needs the identity interaction; whiten the run first",
                    ));
                }
                let v = norm_growth_check(t, &self.k, self.settings.hull_tol)?;
                let clearing = center_clearing(t, &self.k, self.delta_last)?;
                let cleared = clearing
                    .as_ref()
                    .is_none_or(|c| c.first_violation.is_none());
                CheckResult {
                    name: check,
                    status: pass_if(v.is_empty() && cleared),
                    detail: format!("{} norm-growth violations", v.len()),
                    evidence: json!({ "violations": listed(&v), "center_clearing": clearing }),
                }
            }
        })
    }
}

pub fn analyze(file: &TrajectoryFile, settings: &AnalysisSettings) -> CliResult<Report> {
    let t = &file.trajectory;
    if t.dim() != 2 {
        return Err(CliError::Dimension(format!(
            "trajectory has d = {}",
            t.dim()
        )));
    }
    let k = limiting_polytope(t.last(), settings.proxy_tol)?;
    let s = maximal_alignment_set(&k, settings.alignment_tol)?;
    let delta_last = t.delta_at(t.last_step());
    let gamma = settings.gamma_for(delta_last);
    let window = tail_window(t, settings)?;
    let cx = Context {
        trajectory: t,
        settings,
        k,
        s,
        window,
        gamma,
        delta_last,
    };
    let checks = settings
        .checks
        .iter()
        .map(|&c| cx.run(c))
        .collect::<CliResult<Vec<_>>>()?;
    let outside_s = limit_classification(t, &cx.s, settings.epsilon)?
        .outside()
        .map(|l| l.token)
        .collect();
    Ok(Report {
        format: REPORT_FORMAT.to_string(),
        n: t.n(),
        steps: t.last_step(),
        dynamics: t.params.kind().name().to_string(),
        seed: t.seed,
        settings: settings.clone(),
        gamma,
        window,
        polytope: cx.k,
        alignment_set: cx.s,
        outside_s,
        checks,
    })
}

pub fn run(path: &Path, overrides: &Overrides, out: &Path) -> CliResult<()> {
    let file = io::read_trajectory(path)?;
    let settings = settings_for(&file, overrides)?;
    let report = analyze(&file, &settings)?;
    let out = io::ensure_dir(out)?;
    io::write_json(&out.join("report.json"), &report, true)?;
    for c in &report.checks {
        let tag = match c.status {
            Status::Pass => style::paint("32", "pass"),
            Status::Fail => style::paint("1;31", "FAIL"),
            Status::Info => "info".to_string(),
            Status::Skipped => "skip".to_string(),
        };
        let name = serde_json::to_value(c.name)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        println!("{tag} {name}: {}", c.detail);
    }
    println!("outside S: {:?}", report.outside_s);
    Ok(())
}
