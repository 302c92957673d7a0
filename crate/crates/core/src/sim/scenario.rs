//! Scenario definitions: the three built-in driving scenarios and the TOML
//! scenario/scene file format.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::KMH_PER_MPS;
use crate::dynamics::VehicleState;
use crate::error::{Error, Result};
use crate::scene::{Footprint, ObstacleTrack, ReferencePath, Waypoint};

pub const LANE_WIDTH: f64 = 3.5;
pub const CAR_LENGTH: f64 = 4.5;
pub const CAR_WIDTH: f64 = 1.8;
/// Longitudinal position of the obstacle in the avoidance and following
/// scenarios; the ego vehicle starts at x = 0.
pub const OBSTACLE_AHEAD: f64 = 60.0;
/// Lateral body-to-body margin the avoidance path is laid out for.
pub const PASS_MARGIN: f64 = 0.7;

const WAYPOINT_SPACING: f64 = 0.5;
const REFERENCE_SPEED: f64 = 30.0 / KMH_PER_MPS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    LaneMerge,
    ObjectAvoidance,
    VehicleFollowing,
    Custom,
}

impl ScenarioKind {
    pub const BUILTIN: [ScenarioKind; 3] = [
        ScenarioKind::LaneMerge,
        ScenarioKind::ObjectAvoidance,
        ScenarioKind::VehicleFollowing,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::LaneMerge => "lane_merge",
            ScenarioKind::ObjectAvoidance => "object_avoidance",
            ScenarioKind::VehicleFollowing => "vehicle_following",
            ScenarioKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub path: ReferencePath,
    pub obstacles: Vec<ObstacleTrack>,
    pub initial_state: VehicleState,
    /// Simulated time, s.
    pub duration: f64,
    pub avoidance_gate: bool,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid("duration", "must be positive"));
        }
        if !self.initial_state.is_finite() || self.initial_state.v < 0.0 {
            return Err(Error::invalid("initial_state", "must be finite with v >= 0"));
        }
        for track in &self.obstacles {
            track.footprint.validate()?;
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse {
            what: "scenario".into(),
            message: e.to_string(),
        })?;
        file.into_scenario()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            name: self.kind,
            duration: self.duration,
            initial_state: self.initial_state,
            scene: SceneFile::from_parts(&self.path, &self.obstacles, self.avoidance_gate),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_file()).expect("scenario serializes")
    }
}

/// Reference path and obstacles, as used by `plan-once`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    /// Target point; defaults to the last waypoint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<[f64; 2]>,
    /// `[x, y, yaw, speed_mps]` rows.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub waypoints: Vec<[f64; 4]>,
    /// Alternative to `waypoints`: a polyline with one reference speed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    #[serde(default)]
    pub avoidance_gate: bool,
    #[serde(default)]
    pub obstacles: Vec<ObstacleTrack>,
}

impl SceneFile {
    fn from_parts(path: &ReferencePath, obstacles: &[ObstacleTrack], avoidance_gate: bool) -> Self {
        Self {
            target: Some(path.target()),
            waypoints: path
                .waypoints()
                .iter()
                .map(|w| [w.x, w.y, w.yaw, w.speed])
                .collect(),
            points: Vec::new(),
            speed: None,
            avoidance_gate,
            obstacles: obstacles.to_vec(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            what: "scene".into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn reference_path(&self) -> Result<ReferencePath> {
        if !self.waypoints.is_empty() {
            let wps: Vec<Waypoint> = self
                .waypoints
                .iter()
                .map(|&[x, y, yaw, speed]| Waypoint { x, y, yaw, speed })
                .collect();
            let last = wps.last().map(|w| [w.x, w.y]).unwrap_or_default();
            return ReferencePath::new(wps, self.target.unwrap_or(last));
        }
        if !self.points.is_empty() {
            let speed = self.speed.unwrap_or(REFERENCE_SPEED);
            let path = ReferencePath::from_points(&self.points, speed)?;
            return match self.target {
                Some(t) => ReferencePath::new(path.waypoints().to_vec(), t),
                None => Ok(path),
            };
        }
        Err(Error::InvalidPath("scene has neither `waypoints` nor `points`".into()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(default = "custom_kind")]
    pub name: ScenarioKind,
    pub duration: f64,
    pub initial_state: VehicleState,
    #[serde(flatten)]
    pub scene: SceneFile,
}

fn custom_kind() -> ScenarioKind {
    ScenarioKind::Custom
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let scenario = Scenario {
            kind: self.name,
            path: self.scene.reference_path()?,
            obstacles: self.scene.obstacles.clone(),
            initial_state: self.initial_state,
            duration: self.duration,
            avoidance_gate: self.scene.avoidance_gate,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

fn car_at(x: f64, y: f64) -> ObstacleTrack {
    ObstacleTrack::stationary(Footprint {
        center: [x, y],
        yaw: 0.0,
        length: CAR_LENGTH,
        width: CAR_WIDTH,
    })
}

/// Straight reference along y = `lateral(x)` sampled every 0.5 m.
fn lane_path(x_start: f64, x_end: f64, lateral: impl Fn(f64) -> f64) -> Result<ReferencePath> {
    let n = ((x_end - x_start) / WAYPOINT_SPACING).round() as usize;
    let points: Vec<[f64; 2]> = (0..=n)
        .map(|i| {
            let x = x_start + i as f64 * WAYPOINT_SPACING;
            [x, lateral(x)]
        })
        .collect();
    ReferencePath::from_points(&points, REFERENCE_SPEED)
}

/// Smooth lateral offset: 0 before `start`, cosine ramp to `amplitude` over
/// `ramp`, hold until `end`, cosine ramp back to 0.
fn swerve(x: f64, start: f64, end: f64, ramp: f64, amplitude: f64) -> f64 {
    let blend = |s: f64| amplitude * (1.0 - (PI * s.clamp(0.0, 1.0)).cos()) / 2.0;
    if x <= end {
        blend((x - start) / ramp)
    } else {
        blend(1.0 - (x - end) / ramp)
    }
}

pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    let scenario = match name {
        "lane_merge" => Scenario {
            kind: ScenarioKind::LaneMerge,
            path: lane_path(-10.0, 400.0, |_| 0.0)?,
            obstacles: Vec::new(),
            initial_state: VehicleState::new(0.0, LANE_WIDTH, 0.0, 0.0, 0.0),
            duration: 24.0,
            avoidance_gate: false,
        },
        "object_avoidance" => {
            // Hold the full offset while any part of the ego body overlaps
            // the obstacle longitudinally, with a few metres to spare.
            let offset = CAR_WIDTH / 2.0 + PASS_MARGIN + CAR_WIDTH / 2.0;
            let hold_start = OBSTACLE_AHEAD - CAR_LENGTH / 2.0 - CAR_LENGTH - 5.0;
            let hold_end = OBSTACLE_AHEAD + CAR_LENGTH / 2.0 + CAR_LENGTH + 5.0;
            let ramp = 30.0;
            Scenario {
                kind: ScenarioKind::ObjectAvoidance,
                path: lane_path(-10.0, 400.0, |x| {
                    swerve(x, hold_start - ramp, hold_end, ramp, offset)
                })?,
                obstacles: vec![car_at(OBSTACLE_AHEAD, 0.0)],
                initial_state: VehicleState::new(0.0, 0.0, 0.0, REFERENCE_SPEED, 0.0),
                duration: 20.0,
                avoidance_gate: true,
            }
        }
        "vehicle_following" => Scenario {
            kind: ScenarioKind::VehicleFollowing,
            path: lane_path(-10.0, 400.0, |_| 0.0)?,
            obstacles: vec![car_at(OBSTACLE_AHEAD, 0.0)],
            initial_state: VehicleState::new(0.0, 0.0, 0.0, 0.0, 0.0),
            duration: 24.0,
            avoidance_gate: false,
        },
        other => return Err(Error::UnknownScenario(other.to_string())),
    };
    scenario.validate()?;
    Ok(scenario)
}
