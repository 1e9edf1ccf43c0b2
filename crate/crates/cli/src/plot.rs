//! Static SVG 1.1 plots of planar runs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use attnflow_core::geometry::{hull2d, points_of, Polygon, PolygonKind, Vec2};
use attnflow_core::Trajectory;
use clap::ValueEnum;

use crate::analyze::Report;
use crate::error::{CliError, CliResult};
use crate::io;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    /// Token paths with the initial and final hulls.
    Trails,
    /// Initial tokens and their hull.
    Initial,
    /// Final tokens and their hull.
    Final,
}

impl PlotKind {
    fn name(self) -> &'static str {
        match self {
            PlotKind::Trails => "trails",
            PlotKind::Initial => "initial",
            PlotKind::Final => "final",
        }
    }
}

const SIZE: f64 = 600.0;
const MARGIN: f64 = 24.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// `x` with 6 significant digits (for `|x| < 1e6`) and no trailing zeros.
pub fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

/// Maps data coordinates onto the canvas, equal scale on both axes, y up.
struct Frame {
    lo: Vec2,
    scale: f64,
    offset: Vec2,
}

impl Frame {
    fn fit(points: impl Iterator<Item = Vec2>) -> Self {
        let (mut lo, mut hi) = (
            Vec2::new(f64::INFINITY, f64::INFINITY),
            Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in points {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if !lo.x.is_finite() {
            lo = Vec2::ZERO;
            hi = Vec2::ZERO;
        }
        let span = (hi.x - lo.x).max(hi.y - lo.y);
        let span = if span > 0.0 { span } else { 1.0 };
        let scale = (SIZE - 2.0 * MARGIN) / span;
        let used = Vec2::new((hi.x - lo.x) * scale, (hi.y - lo.y) * scale);
        let offset = Vec2::new((SIZE - used.x) / 2.0, (SIZE - used.y) / 2.0);
        Self { lo, scale, offset }
    }

    fn map(&self, p: Vec2) -> (String, String) {
        let x = self.offset.x + (p.x - self.lo.x) * self.scale;
        let y = SIZE - (self.offset.y + (p.y - self.lo.y) * self.scale);
        (num(x), num(y))
    }

    fn path(&self, pts: &[Vec2]) -> String {
        pts.iter()
            .map(|&p| {
                let (x, y) = self.map(p);
                format!("{x},{y}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn hull_element(svg: &mut String, frame: &Frame, k: &Polygon, style: &str) {
    let v = k.vertices();
    match k.kind() {
        PolygonKind::Point => {
            let (x, y) = frame.map(v[0]);
            let _ = writeln!(
                svg,
                r#"<circle cx="{x}" cy="{y}" r="7" fill="none" {style}/>"#
            );
        }
        PolygonKind::Segment => {
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" {style}/>"#,
                frame.path(v)
            );
        }
        PolygonKind::Proper => {
            let _ = writeln!(
                svg,
                r#"<polygon points="{}" fill="none" {style}/>"#,
                frame.path(v)
            );
        }
    }
}

fn dots(svg: &mut String, frame: &Frame, pts: &[Vec2], r: f64, filled: bool) {
    for (i, &p) in pts.iter().enumerate() {
        let (x, y) = frame.map(p);
        let color = PALETTE[i % PALETTE.len()];
        let paint = if filled {
            format!(r#"fill="{color}""#)
        } else {
            format!(r#"fill="white" stroke="{color}""#)
        };
        let _ = writeln!(svg, r#"<circle cx="{x}" cy="{y}" r="{}" {paint}/>"#, num(r));
    }
}

/// Renders `kind` for a planar trajectory, marking S and the outside-S
/// tokens when a report is given.
pub fn render(
    trajectory: &Trajectory,
    kind: PlotKind,
    report: Option<&Report>,
) -> CliResult<String> {
    if trajectory.dim() != 2 {
        return Err(CliError::Dimension(format!(
            "trajectory has d = {}",
            trajectory.dim()
        )));
    }
    let first = points_of(trajectory.initial())?;
    let last = points_of(trajectory.last())?;
    let paths: Vec<Vec<Vec2>> = match kind {
        PlotKind::Trails => {
            let steps = trajectory
                .configs
                .iter()
                .map(points_of)
                .collect::<Result<Vec<_>, _>>()?;
            (0..trajectory.n())
                .map(|i| steps.iter().map(|s| s[i]).collect())
                .collect()
        }
        _ => Vec::new(),
    };
    let s_points: Vec<Vec2> = report
        .map(|r| r.alignment_set.positions().collect())
        .unwrap_or_default();
    let extent: Vec<Vec2> = match kind {
        PlotKind::Trails => paths.iter().flatten().copied().collect(),
        PlotKind::Initial => first.clone(),
        PlotKind::Final => last.clone(),
    };
    let frame = Frame::fit(extent.iter().chain(&s_points).copied());

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        num(SIZE)
    );
    let _ = writeln!(
        svg,
        "<title>{} {}: n = {}, {} steps</title>",
        trajectory.params.kind().name(),
        kind.name(),
        trajectory.n(),
        trajectory.last_step()
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let initial_style = r##"stroke="#555555" stroke-width="1.5" stroke-dasharray="6 4""##;
    let final_style = r##"stroke="#000000" stroke-width="2""##;
    match kind {
        PlotKind::Trails => {
            for (i, p) in paths.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                let _ = writeln!(
                    svg,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1" stroke-opacity="0.8"/>"#,
                    frame.path(p)
                );
            }
            hull_element(&mut svg, &frame, &hull2d(&first)?, initial_style);
            hull_element(&mut svg, &frame, &hull2d(&last)?, final_style);
            dots(&mut svg, &frame, &first, 2.5, false);
            dots(&mut svg, &frame, &last, 3.0, true);
        }
        PlotKind::Initial => {
            hull_element(&mut svg, &frame, &hull2d(&first)?, initial_style);
            dots(&mut svg, &frame, &first, 3.0, false);
        }
        PlotKind::Final => {
            hull_element(&mut svg, &frame, &hull2d(&last)?, final_style);
            dots(&mut svg, &frame, &last, 3.0, true);
        }
    }
    if let Some(r) = report {
        for &p in &s_points {
            let (x, y) = frame.map(p);
            let _ = writeln!(
                svg,
                r##"<path d="M {x} {y} m -5 -5 l 10 10 m -10 0 l 10 -10" stroke="#000000" stroke-width="1.5"/>"##
            );
        }
        for &i in &r.outside_s {
            if let Some(&p) = last.get(i) {
                let (x, y) = frame.map(p);
                let _ = writeln!(
                    svg,
                    r##"<circle cx="{x}" cy="{y}" r="9" fill="none" stroke="#d62728" stroke-width="2"/>"##
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn run(path: &Path, kind: PlotKind, report: Option<&Path>, out: &Path) -> CliResult<()> {
    let file = io::read_trajectory(path)?;
    let report: Option<Report> = match report {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io("cannot read", p, e))?;
            Some(io::parse_json(&text, p)?)
        }
        None => None,
    };
    let svg = render(&file.trajectory, kind, report.as_ref())?;
    let out = io::ensure_dir(out)?;
    let target = out.join(format!("{}.svg", kind.name()));
    io::write_atomic(&target, svg.as_bytes())?;
    println!("wrote {}", target.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(123.456789), "123.457");
        assert_eq!(num(599.9999999), "600");
        assert_eq!(num(0.000123456789), "0.000123457");
        assert_eq!(num(-1.5), "-1.5");
        assert_eq!(num(-0.0000001), "-0.0000001");
    }
}
