mod analyze;
mod error;
mod io;
mod lyapunov;
mod plot;
mod simulate;
mod style;

use std::path::PathBuf;
use std::process::ExitCode;

use attnflow_core::Retention;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliResult;

#[derive(Parser)]
#[command(
    name = "attnflow",
    version,
    about = "Simulate and analyze localmax attention dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or config file and write trajectory.json, positions.csv and summary.json.
    Simulate(SimulateArgs),
    /// Run trajectory diagnostics and write report.json.
    Analyze(AnalyzeArgs),
    /// Lyapunov analysis of a run with retained matrices; writes lyapunov.json.
    Lyapunov(LyapunovArgs),
    /// Draw a planar trajectory as SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false)]
struct Source {
    /// Built-in scenario (figure2-localmax, figure2-hardmax, figure2-softmax, remark33, figure56, vanishing-delta).
    #[arg(long, group = "source")]
    preset: Option<String>,
    /// JSON run configuration.
    #[arg(long, group = "source")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: Source,
    /// Overrides the seed of the random initial condition.
    #[arg(long)]
    seed: Option<u64>,
    /// Maximum number of steps.
    #[arg(long)]
    horizon: Option<u64>,
    /// Per-step data to keep: any of `matrices`, `neighborhoods`, or `none`.
    #[arg(long, value_delimiter = ',')]
    retain: Option<Vec<RetainFlag>>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum RetainFlag {
    Matrices,
    Neighborhoods,
    None,
}

fn retention(flags: &[RetainFlag]) -> Retention {
    Retention {
        matrices: flags.contains(&RetainFlag::Matrices),
        neighborhoods: flags.contains(&RetainFlag::Neighborhoods),
    }
}

/// Overrides of the analysis settings stored with the run.
#[derive(Args)]
struct TailArgs {
    /// Radius of limit classification.
    #[arg(long)]
    epsilon: Option<f64>,
    /// S1/S2 diameter threshold.
    #[arg(long)]
    gamma: Option<f64>,
    /// Tail window as a fraction of the steps.
    #[arg(long)]
    window: Option<f64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// trajectory.json written by `simulate`.
    trajectory: PathBuf,
    #[command(flatten)]
    tail: TailArgs,
    /// Output directory; defaults to the trajectory's directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LyapunovArgs {
    /// trajectory.json written by `simulate`.
    trajectory: PathBuf,
    #[command(flatten)]
    tail: TailArgs,
    /// Terminal vector of the backward sequence.
    #[arg(long, value_enum)]
    terminal: Option<TerminalArg>,
    /// Seed of the random terminal vector.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the trajectory's directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TerminalArg {
    Uniform,
    Random,
}

#[derive(Args)]
struct PlotArgs {
    /// trajectory.json written by `simulate`.
    trajectory: PathBuf,
    #[arg(long, value_enum, default_value = "trails")]
    kind: plot::PlotKind,
    /// Analysis report whose alignment set and outside-S tokens are marked.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Output directory; defaults to the trajectory's directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn out_dir(out: Option<PathBuf>, trajectory: &std::path::Path) -> PathBuf {
    out.unwrap_or_else(|| match trajectory.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    })
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => {
            let mut config = match (a.source.preset, a.source.config) {
                (Some(name), _) => attnflow_core::scenario::Preset::from_name(&name)?.config(),
                (None, Some(path)) => io::read_config(&path)?,
                (None, None) => unreachable!("clap requires a source"),
            };
            if let Some(seed) = a.seed {
                config = config.with_seed(seed);
            }
            if let Some(h) = a.horizon {
                config = config.with_horizon(h);
            }
            if let Some(flags) = &a.retain {
                config = config.with_retention(retention(flags));
            }
            simulate::run(&config, &a.out)
        }
        Command::Analyze(a) => {
            let out = out_dir(a.out, &a.trajectory);
            analyze::run(&a.trajectory, &overrides(&a.tail), &out)
        }
        Command::Lyapunov(a) => {
            let out = out_dir(a.out, &a.trajectory);
            let terminal = match (a.terminal, a.seed) {
                (Some(TerminalArg::Uniform), _) => Some(attnflow_core::scenario::Terminal::Uniform),
                (Some(TerminalArg::Random), seed) | (None, seed @ Some(_)) => {
                    Some(attnflow_core::scenario::Terminal::Random {
                        seed: seed.unwrap_or(0),
                    })
                }
                (None, None) => None,
            };
            lyapunov::run(&a.trajectory, &overrides(&a.tail), terminal, &out)
        }
        Command::Plot(a) => {
            let out = out_dir(a.out, &a.trajectory);
            plot::run(&a.trajectory, a.kind, a.report.as_deref(), &out)
        }
    }
}

fn overrides(t: &TailArgs) -> analyze::Overrides {
    analyze::Overrides {
        epsilon: t.epsilon,
        gamma: t.gamma,
        window: t.window,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{} {e}", style::error_label());
            e.exit_code()
        }
    }
}
