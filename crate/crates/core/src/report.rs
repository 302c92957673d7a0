//! Run artefacts: trajectory CSV, summary metrics and SVG plots.

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlInput, VehicleState};
use crate::error::{Error, Result};
use crate::scene::CircleObstacle;
use crate::sim::{Outcome, SimulationLog, TickRecord};

pub const TRAJECTORY_COLUMNS: [&str; 10] = [
    "t_s",
    "x_m",
    "y_m",
    "theta_rad",
    "v_mps",
    "delta_rad",
    "a_cmd",
    "omega_cmd",
    "d_obj_m",
    "cycle_ms",
];

fn csv_error(e: csv::Error) -> Error {
    Error::Parse {
        what: "trajectory csv".into(),
        message: e.to_string(),
    }
}

/// Writes one row per record. Floats use the shortest representation that
/// parses back to the same value; an obstacle-free clearance is `inf`.
pub fn write_trajectory_csv<W: Write>(out: W, records: &[TickRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_COLUMNS).map_err(csv_error)?;
    for r in records {
        let s = &r.state;
        let row = [
            r.t,
            s.x,
            s.y,
            s.theta,
            s.v,
            s.delta,
            r.input.a,
            r.input.omega,
            r.d_obj,
            r.cycle_ms,
        ];
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<TickRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers().map_err(csv_error)?.clone();
    if headers.iter().ne(TRAJECTORY_COLUMNS) {
        return Err(Error::Parse {
            what: "trajectory csv".into(),
            message: format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>()),
        });
    }
    let mut records = Vec::new();
    for (line, row) in rd.records().enumerate() {
        let row = row.map_err(csv_error)?;
        let mut v = [0.0; 10];
        for (slot, (field, name)) in v.iter_mut().zip(row.iter().zip(TRAJECTORY_COLUMNS)) {
            *slot = field.trim().parse().map_err(|_| Error::Parse {
                what: "trajectory csv".into(),
                message: format!("row {}: bad value {field:?} for {name}", line + 1),
            })?;
        }
        records.push(TickRecord {
            t: v[0],
            state: VehicleState::new(v[1], v[2], v[3], v[4], v[5]),
            input: ControlInput::new(v[6], v[7]),
            d_obj: v[8],
            cycle_ms: v[9],
        });
    }
    Ok(records)
}

/// Nearest-rank percentile, `q` in (0, 1]. Empty input gives 0.
pub fn percentile(samples: &[f64], q: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn mean(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        0.0
    } else {
        samples.iter().sum::<f64>() / samples.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    /// `None` when the scene has no obstacles.
    pub min_d_obj: Option<f64>,
    pub max_speed: f64,
    pub max_abs_accel: f64,
    pub max_abs_steer: f64,
    pub mean_cycle_ms: f64,
    pub p95_cycle_ms: f64,
    pub max_cycle_ms: f64,
    pub planner_faults: usize,
    pub collision: bool,
    pub completed: bool,
    pub outcome: Outcome,
}

impl MetricsSummary {
    pub fn from_log(log: &SimulationLog) -> Self {
        let recs = &log.records;
        let fold_max = |f: &dyn Fn(&TickRecord) -> f64| recs.iter().map(f).fold(0.0, f64::max);
        let min_d = recs.iter().map(|r| r.d_obj).fold(f64::INFINITY, f64::min);
        Self {
            min_d_obj: min_d.is_finite().then_some(min_d),
            max_speed: fold_max(&|r| r.state.v),
            max_abs_accel: fold_max(&|r| r.input.a.abs()),
            max_abs_steer: fold_max(&|r| r.state.delta.abs()),
            mean_cycle_ms: mean(&log.cycle_times_ms),
            p95_cycle_ms: percentile(&log.cycle_times_ms, 0.95),
            max_cycle_ms: log.cycle_times_ms.iter().copied().fold(0.0, f64::max),
            planner_faults: log.faults,
            collision: log.collision(),
            completed: log.completed(),
            outcome: log.outcome,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialise")
    }
}

/// Axis-aligned bounds of a set of series, padded so flat lines stay visible.
fn bounds(points: impl Iterator<Item = (f64, f64)>) -> ([f64; 2], [f64; 2]) {
    let mut x = [f64::INFINITY, f64::NEG_INFINITY];
    let mut y = [f64::INFINITY, f64::NEG_INFINITY];
    for (px, py) in points.filter(|(a, b)| a.is_finite() && b.is_finite()) {
        x = [x[0].min(px), x[1].max(px)];
        y = [y[0].min(py), y[1].max(py)];
    }
    if !x[0].is_finite() {
        return ([0.0, 1.0], [0.0, 1.0]);
    }
    let pad = |r: [f64; 2]| {
        let span = (r[1] - r[0]).max(1e-6);
        [r[0] - 0.05 * span, r[1] + 0.05 * span]
    };
    (pad(x), pad(y))
}

const W: f64 = 800.0;
const H: f64 = 400.0;
const MARGIN: f64 = 50.0;

struct Frame {
    x: [f64; 2],
    y: [f64; 2],
    /// Equal scaling on both axes.
    square: bool,
}

impl Frame {
    fn scale(&self) -> (f64, f64) {
        let sx = (W - 2.0 * MARGIN) / (self.x[1] - self.x[0]);
        let sy = (H - 2.0 * MARGIN) / (self.y[1] - self.y[0]);
        if self.square {
            let s = sx.min(sy);
            (s, s)
        } else {
            (sx, sy)
        }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let (sx, sy) = self.scale();
        (MARGIN + (x - self.x[0]) * sx, H - MARGIN - (y - self.y[0]) * sy)
    }
}

fn svg_open(title: &str, frame: &Frame, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#, W / 2.0);
    let (x0, y0) = frame.map(frame.x[0], frame.y[0]);
    let (x1, y1) = frame.map(frame.x[1], frame.y[1]);
    let _ = writeln!(
        s,
        r#"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{}" text-anchor="middle">{xlabel}</text>"#,
        (x0 + x1) / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{ylabel}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    for (v, anchor_x, anchor_y) in [
        (frame.x[0], x0, y0 + 16.0),
        (frame.x[1], x1, y0 + 16.0),
    ] {
        let _ = writeln!(s, r#"<text x="{anchor_x:.1}" y="{anchor_y:.1}" text-anchor="middle">{v:.2}</text>"#);
    }
    for (v, py) in [(frame.y[0], y0), (frame.y[1], y1)] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"#, x0 - 4.0, py + 4.0);
    }
    s
}

fn polyline(frame: &Frame, pts: &[(f64, f64)], color: &str) -> String {
    let mut d = String::new();
    for &(x, y) in pts.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
        let (px, py) = frame.map(x, y);
        let _ = write!(d, "{px:.2},{py:.2} ");
    }
    format!(
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
        d.trim_end()
    ) + "\n"
}

/// A time series plot.
pub fn time_series_svg(title: &str, ylabel: &str, series: &[(f64, f64)]) -> String {
    let (x, y) = bounds(series.iter().copied());
    let frame = Frame { x, y, square: false };
    let mut s = svg_open(title, &frame, "t [s]", ylabel);
    s += &polyline(&frame, series, "steelblue");
    s += "</svg>\n";
    s
}

/// Driven path, reference path and obstacle circles on equal axes.
pub fn path_svg(records: &[TickRecord], reference: &[[f64; 2]], circles: &[CircleObstacle]) -> String {
    let driven: Vec<(f64, f64)> = records.iter().map(|r| (r.state.x, r.state.y)).collect();
    let refpts: Vec<(f64, f64)> = reference.iter().map(|p| (p[0], p[1])).collect();
    let circle_box = circles.iter().flat_map(|c| {
        [
            (c.cx - c.radius, c.cy - c.radius),
            (c.cx + c.radius, c.cy + c.radius),
        ]
    });
    // keep the frame around the driven region; a long reference path would
    // otherwise squash everything
    let (x, y) = bounds(driven.iter().copied().chain(circle_box));
    let frame = Frame { x, y, square: true };
    let mut s = svg_open("path", &frame, "x [m]", "y [m]");
    let clipped: Vec<(f64, f64)> = refpts
        .into_iter()
        .filter(|(px, _)| *px >= x[0] && *px <= x[1])
        .collect();
    s += &polyline(&frame, &clipped, "gray");
    for c in circles {
        let (cx, cy) = frame.map(c.cx, c.cy);
        let r = c.radius * frame.scale().0;
        let _ = writeln!(
            s,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="indianred" fill-opacity="0.3" stroke="indianred"/>"#
        );
    }
    s += &polyline(&frame, &driven, "steelblue");
    s += "</svg>\n";
    s
}

/// The four standard plots of a run as (file name, contents).
pub fn run_plots(
    records: &[TickRecord],
    reference: &[[f64; 2]],
    circles: &[CircleObstacle],
) -> Vec<(&'static str, String)> {
    let series = |f: fn(&TickRecord) -> f64| records.iter().map(|r| (r.t, f(r))).collect::<Vec<_>>();
    vec![
        ("speed.svg", time_series_svg("speed", "v [m/s]", &series(|r| r.state.v))),
        ("acceleration.svg", time_series_svg("acceleration command", "a [m/s^2]", &series(|r| r.input.a))),
        ("steering.svg", time_series_svg("steering angle", "delta [rad]", &series(|r| r.state.delta))),
        ("path.svg", path_svg(records, reference, circles)),
    ]
}
