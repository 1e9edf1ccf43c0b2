use std::path::Path;

use attnflow_core::geometry::{eta, limiting_polytope, Polygon};
use attnflow_core::scenario::RunConfig;
use attnflow_core::{DeltaSchedule, DynamicsKind, StopReason, Trajectory};
use serde::Serialize;

use crate::error::CliResult;
use crate::io::{self, TrajectoryFile, TRAJECTORY_FORMAT};

#[derive(Serialize)]
struct Summary<'a> {
    seed: Option<u64>,
    n: usize,
    d: usize,
    alpha: f64,
    dynamics: &'a DynamicsKind,
    schedule: &'a DeltaSchedule,
    steps: usize,
    stop: StopReason,
    /// Hull of the final state with near-collinear vertices dropped; planar runs only.
    final_hull: Option<Polygon>,
    /// Largest distance from a final token to `final_hull`.
    eta_horizon: Option<f64>,
    final_max_displacement: Option<f64>,
    displacements: &'a [f64],
}

fn summary<'a>(config: &'a RunConfig, trajectory: &'a Trajectory) -> CliResult<Summary<'a>> {
    let (final_hull, eta_horizon) = if trajectory.dim() == 2 {
        let k = limiting_polytope(trajectory.last(), config.analyses.proxy_tol)?;
        let e = eta(trajectory.last(), &k)?;
        (Some(k), Some(e))
    } else {
        (None, None)
    };
    Ok(Summary {
        seed: trajectory.seed,
        n: trajectory.n(),
        d: trajectory.dim(),
        alpha: config.alpha,
        dynamics: &config.dynamics,
        schedule: &config.schedule,
        steps: trajectory.last_step(),
        stop: trajectory.stop,
        final_hull,
        eta_horizon,
        final_max_displacement: trajectory.displacements.last().copied(),
        displacements: &trajectory.displacements,
    })
}

pub fn run(config: &RunConfig, out: &Path) -> CliResult<()> {
    let trajectory = config.run()?;
    let out = io::ensure_dir(out)?;
    let file = TrajectoryFile {
        format: TRAJECTORY_FORMAT.to_string(),
        config: Some(config.clone()),
        trajectory,
    };
    io::write_json(&out.join("trajectory.json"), &file, false)?;
    io::write_atomic(
        &out.join("positions.csv"),
        &io::positions_csv(&file.trajectory)?,
    )?;
    io::write_json(
        &out.join("summary.json"),
        &summary(config, &file.trajectory)?,
        true,
    )?;
    println!(
        "simulated {} tokens for {} steps ({}); wrote {}",
        file.trajectory.n(),
        file.trajectory.last_step(),
        config.dynamics.name(),
        out.display()
    );
    Ok(())
}
