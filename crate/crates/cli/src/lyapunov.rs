use std::path::Path;

use attnflow_core::diagnostics::{classify_tail, TailWindow};
use attnflow_core::lyapunov::{backward_aps, lyapunov_report, LyapunovReport, ProbabilityVector};
use attnflow_core::scenario::Terminal;
use serde::Serialize;

use crate::analyze::{settings_for, tail_window, Overrides};
use crate::error::{CliError, CliResult};
use crate::io;

pub const LYAPUNOV_FORMAT: &str = "attnflow-lyapunov/1";

/// Bound on `|decrement - dissipation| / (1 + V)` at every step.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Bound on the defining residual of the probability sequence.
pub const APS_TOL: f64 = 1e-12;

/// Slack for V increases and the lower-bound checks.
pub const SLACK: f64 = 1e-10;

#[derive(Serialize)]
struct Output<'a> {
    format: &'static str,
    terminal: Terminal,
    gamma: f64,
    window: TailWindow,
    residual_tol: f64,
    aps_tol: f64,
    passed: bool,
    /// `aps[t]` is the probability vector at step `t`.
    aps: Vec<&'a [f64]>,
    #[serde(flatten)]
    report: &'a LyapunovReport,
}

pub fn run(
    path: &Path,
    overrides: &Overrides,
    terminal: Option<Terminal>,
    out: &Path,
) -> CliResult<()> {
    let file = io::read_trajectory(path)?;
    let t = &file.trajectory;
    let chain = t.matrix_chain()?;
    let settings = settings_for(&file, overrides)?;
    let terminal = terminal.unwrap_or(settings.terminal);
    let pi = match terminal {
        Terminal::Uniform => ProbabilityVector::uniform(t.n())?,
        Terminal::Random { seed } => ProbabilityVector::random(t.n(), seed)?,
    };
    let window = tail_window(t, &settings)?;
    let gamma = settings.gamma_for(t.delta_at(t.last_step()));
    let class = classify_tail(t, gamma, window)?;
    let aps = backward_aps(chain, pi.clone())?;
    let report = lyapunov_report(t, pi, &class, SLACK)?;
    let passed = report.max_relative_residual <= RESIDUAL_TOL
        && report.aps_residual <= APS_TOL
        && report.increases.is_empty();
    let output = Output {
        format: LYAPUNOV_FORMAT,
        terminal,
        gamma,
        window,
        residual_tol: RESIDUAL_TOL,
        aps_tol: APS_TOL,
        passed,
        aps: aps.vectors.iter().map(|p| p.weights()).collect(),
        report: &report,
    };
    let out = io::ensure_dir(out)?;
    io::write_json(&out.join("lyapunov.json"), &output, true)?;
    println!(
        "max decrement residual {:.3e}, APS residual {:.3e}, V {:.6e} -> {:.6e}, S2 mass tail {:.3e}",
        report.max_relative_residual,
        report.aps_residual,
        report.v.first().copied().unwrap_or(0.0),
        report.v.last().copied().unwrap_or(0.0),
        report.s2_mass_tail
    );
    if passed {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "Lyapunov identities fail: decrement residual {:.3e} (tol {RESIDUAL_TOL:e}), APS residual {:.3e} (tol {APS_TOL:e}), {} increases of V",
            report.max_relative_residual,
            report.aps_residual,
            report.increases.len()
        )))
    }
}
