// SPDX-License-Identifier: Apache-2.0

//! Artifact rendering: CSV tables, JSON report envelopes, and a small
//! log-log SVG plot.
//!
//! Everything renders to strings first so tests can pin byte-level output;
//! the writers only add directory creation. Floats go through one shared
//! formatter (shortest round-trip scientific form), which is what makes
//! repeated runs of the same configuration byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use crate::history::{FadingBoundSample, PiecewiseTrajectory};
use crate::solver::SweepRow;
use crate::space::{Grid, StateVector};
use crate::steering::ControlVector;
use crate::{Error, Result};

pub const REPORT_SCHEMA: &str = "evosteer-report/1";

/// Shortest round-trip scientific form, the one float format every artifact
/// uses.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:e}")
    }
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// JSON wrapper every report payload ships in.
#[derive(serde::Serialize)]
pub struct ReportEnvelope<T: serde::Serialize> {
    pub schema: &'static str,
    pub command: &'static str,
    pub payload: T,
}

pub fn render_json<T: serde::Serialize>(envelope: &ReportEnvelope<T>) -> Result<String> {
    serde_json::to_string_pretty(envelope)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::InvalidInput(format!("report serialization failed: {e}")))
}

pub fn render_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("lambda,terminal_error,control_l2,cost,iterations,converged\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_float(r.lambda),
            fmt_float(r.terminal_error),
            fmt_float(r.control_l2),
            fmt_float(r.cost),
            r.iterations,
            r.converged
        );
    }
    out
}

pub fn render_matrix_csv(m: &nalgebra::DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_float(m[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Node-wise trajectory rows. A jump node contributes two rows with the
/// same time stamp: the left value, then the post-jump value.
pub fn trajectory_rows(traj: &PiecewiseTrajectory) -> Vec<(f64, Vec<f64>)> {
    let mut rows = Vec::with_capacity(traj.times().len() + traj.jumps().len());
    for (i, t) in traj.times().iter().enumerate() {
        rows.push((*t, traj.states()[i].0.iter().copied().collect()));
        if traj.jumps().iter().any(|(j, _)| *j == i) {
            rows.push((*t, traj.right_value(i).0.iter().copied().collect()));
        }
    }
    rows
}

pub fn render_trajectory_csv(traj: &PiecewiseTrajectory) -> String {
    let n = traj.states().first().map(|s| s.len()).unwrap_or(0);
    let mut out = String::from("t");
    for k in 1..=n {
        let _ = write!(out, ",mode_{k}");
    }
    out.push('\n');
    for (t, v) in trajectory_rows(traj) {
        let _ = write!(out, "{}", fmt_float(t));
        for x in &v {
            let _ = write!(out, ",{}", fmt_float(*x));
        }
        out.push('\n');
    }
    out
}

pub fn render_control_csv(times: &[f64], controls: &[ControlVector]) -> String {
    let n = controls.first().map(|c| c.len()).unwrap_or(0);
    let mut out = String::from("t");
    for k in 0..n {
        let _ = write!(out, ",u_{}", k + 2);
    }
    out.push('\n');
    for (t, u) in times.iter().zip(controls) {
        let _ = write!(out, "{}", fmt_float(*t));
        for x in u.0.iter() {
            let _ = write!(out, ",{}", fmt_float(*x));
        }
        out.push('\n');
    }
    out
}

/// Spatial profile table, `xi,value` per grid point.
pub fn render_profile_csv(grid: &Grid, state: &StateVector) -> String {
    let mut out = String::from("xi,value\n");
    for (xi, v) in grid.points().iter().zip(state.values()) {
        let _ = writeln!(out, "{},{}", fmt_float(*xi), fmt_float(*v));
    }
    out
}

pub fn render_fading_csv(samples: &[FadingBoundSample]) -> String {
    let mut out = String::from("t,lhs,rhs\n");
    for s in samples {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_float(s.t),
            fmt_float(s.lhs),
            fmt_float(s.rhs)
        );
    }
    out
}

/// Log-log plot of terminal error against λ, self-contained SVG.
pub fn render_sweep_svg(rows: &[SweepRow]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const ML: f64 = 70.0; // left margin
    const MR: f64 = 20.0;
    const MT: f64 = 24.0;
    const MB: f64 = 56.0;

    let floor = 1e-300;
    let xs: Vec<f64> = rows.iter().map(|r| r.lambda.max(floor).log10()).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|r| r.terminal_error.max(floor).log10())
        .collect();
    let pad = |lo: f64, hi: f64| {
        if (hi - lo).abs() < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x_lo, x_hi) = pad(
        xs.iter().cloned().fold(f64::INFINITY, f64::min),
        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let (y_lo, y_hi) = pad(
        ys.iter().cloned().fold(f64::INFINITY, f64::min),
        ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let px = |x: f64| ML + (x - x_lo) / (x_hi - x_lo) * (W - ML - MR);
    let py = |y: f64| H - MB - (y - y_lo) / (y_hi - y_lo) * (H - MT - MB);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"monospace\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    // Axes.
    let _ = writeln!(
        s,
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB
    );
    let _ = writeln!(
        s,
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB,
        W - MR,
        H - MB
    );
    // Decade ticks.
    let mut d = x_lo.ceil() as i64;
    while (d as f64) <= x_hi {
        let x = px(d as f64);
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>",
            H - MB,
            H - MB + 5.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">1e{d}</text>",
            H - MB + 20.0
        );
        d += 1;
    }
    let mut d = y_lo.ceil() as i64;
    while (d as f64) <= y_hi {
        let y = py(d as f64);
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{ML}\" y2=\"{y:.2}\" stroke=\"black\"/>",
            ML - 5.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">1e{d}</text>",
            ML - 9.0,
            y + 4.0
        );
        d += 1;
    }
    // Axis labels.
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">lambda</text>",
        ML + (W - ML - MR) / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {:.2})\">terminal error</text>",
        MT + (H - MT - MB) / 2.0,
        MT + (H - MT - MB) / 2.0
    );
    // Data.
    let pts: Vec<String> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
        .collect();
    let _ = writeln!(
        s,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>",
        pts.join(" ")
    );
    for (x, y) in xs.iter().zip(&ys) {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f77b4\"/>",
            px(*x),
            py(*y)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::ModeVector;

    fn rows() -> Vec<SweepRow> {
        vec![
            SweepRow {
                lambda: 1e-1,
                terminal_error: 0.64,
                control_l2: 1.0,
                cost: 0.5,
                iterations: 2,
                converged: true,
            },
            SweepRow {
                lambda: 1e-2,
                terminal_error: 0.15,
                control_l2: 2.0,
                cost: 0.3,
                iterations: 2,
                converged: true,
            },
        ]
    }

    #[test]
    fn sweep_csv_layout() {
        let csv = render_sweep_csv(&rows());
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "lambda,terminal_error,control_l2,cost,iterations,converged"
        );
        let first = lines.next().unwrap();
        assert!(first.starts_with("1e-1,"), "{first}");
        assert!(first.ends_with(",2,true"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn float_format_round_trips() {
        for x in [
            0.0,
            1.0,
            -2.5e-13,
            0.057,
            std::f64::consts::PI,
            1.7293294335267746,
        ] {
            let s = fmt_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} → {s}");
        }
    }

    #[test]
    fn trajectory_csv_duplicates_jump_nodes() {
        let times = vec![0.0, 0.5, 1.0];
        let states = vec![
            ModeVector::from_coeffs(&[1.0, 0.0]),
            ModeVector::from_coeffs(&[0.5, 0.0]),
            ModeVector::from_coeffs(&[0.2, 0.1]),
        ];
        let jump = ModeVector::from_coeffs(&[0.0, 0.1]);
        let traj = PiecewiseTrajectory::new(times, states, vec![(1, jump)]).unwrap();
        let csv = render_trajectory_csv(&traj);
        assert_eq!(csv.lines().next().unwrap(), "t,mode_1,mode_2");
        // Four data rows: three nodes plus the duplicated jump node.
        assert_eq!(csv.lines().count(), 5);
        let stamps: Vec<&str> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap())
            .collect();
        assert_eq!(stamps, vec!["0", "5e-1", "5e-1", "1e0"]);
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let svg = render_sweep_svg(&rows());
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("terminal error"));
    }

    #[test]
    fn json_envelope_has_schema_header() {
        let env = ReportEnvelope {
            schema: REPORT_SCHEMA,
            command: "sweep",
            payload: rows(),
        };
        let text = render_json(&env).unwrap();
        assert!(text.contains("\"schema\": \"evosteer-report/1\""));
        assert!(text.contains("\"command\": \"sweep\""));
        assert!(text.ends_with("\n"));
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["payload"].as_array().unwrap().len(), 2);
    }
}
