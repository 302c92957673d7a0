//! Closed-loop simulation of the planner against a bicycle-model plant.

pub mod geometry;
pub mod run;
pub mod scenario;

pub use geometry::{footprint_clearance, VehicleGeometry};
pub use run::{inject_disturbance, run, DisturbanceBound, Outcome, SimOptions, SimulationLog, TickRecord};
pub use scenario::{builtin_scenario, Scenario, ScenarioKind, SceneFile};

use crate::sim::scenario::{CAR_LENGTH, OBSTACLE_AHEAD};

/// Smallest body-to-body distance between the ego vehicle and any obstacle
/// over the run.
pub fn min_body_clearance(log: &SimulationLog, scenario: &Scenario, geometry: &VehicleGeometry) -> f64 {
    log.records
        .iter()
        .flat_map(|r| {
            let ego = geometry.footprint(&r.state);
            scenario
                .obstacles
                .iter()
                .map(move |o| footprint_clearance(&ego, &o.footprint_at(r.t)))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Gap between the ego front bumper and the rear face of the lead obstacle
/// of the following scenario at the end of the run.
pub fn final_bumper_gap(log: &SimulationLog, scenario: &Scenario, geometry: &VehicleGeometry) -> Option<f64> {
    let last = log.records.last()?;
    let lead = scenario.obstacles.first()?.footprint_at(last.t);
    let ego = geometry.footprint(&last.state);
    Some(footprint_clearance(&ego, &lead))
}

/// Rear face of the built-in lead obstacle, for reference.
pub const LEAD_REAR_FACE: f64 = OBSTACLE_AHEAD - CAR_LENGTH / 2.0;
