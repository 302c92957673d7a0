//! Receding-horizon closed loop: replan at a fixed rate, hold each planned
//! input over its planner step and integrate the plant at a finer step.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use rand_chacha::ChaCha8Rng;

use crate::config::PlannerConfig;
use crate::dynamics::{step, wrap_angle, ControlInput, VehicleState};
use crate::error::{Error, Result};
use crate::parallel::Backend;
use crate::planner::{InputSequence, PlannedTrajectory, Planner};
use crate::scene::{min_obstacle_distance, Scene};
use crate::sim::scenario::Scenario;

/// Consecutive failed cycles after which the run stops.
pub const MAX_CONSECUTIVE_FAULTS: usize = 3;
/// Completion: within this distance of the target point...
pub const ARRIVAL_RADIUS: f64 = 2.0;
/// ...and slower than this.
pub const ARRIVAL_SPEED: f64 = 0.3;

/// Per-channel half-widths of a uniform state disturbance applied to the
/// plant only.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DisturbanceBound {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub delta: f64,
}

impl DisturbanceBound {
    pub fn is_zero(&self) -> bool {
        *self == DisturbanceBound::default()
    }

    fn validate(&self) -> Result<()> {
        for (key, b) in [
            ("x", self.x),
            ("y", self.y),
            ("theta", self.theta),
            ("v", self.v),
            ("delta", self.delta),
        ] {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::invalid(
                    &format!("disturbance.{key}"),
                    "must be finite and non-negative",
                ));
            }
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, bound: f64) -> f64 {
    if bound == 0.0 {
        0.0
    } else {
        rng.random_range(-bound..=bound)
    }
}

/// Adds a bounded uniform perturbation to the plant state.
pub fn inject_disturbance(
    state: &VehicleState,
    bound: &DisturbanceBound,
    rng: &mut ChaCha8Rng,
) -> VehicleState {
    if bound.is_zero() {
        return *state;
    }
    VehicleState {
        x: state.x + uniform(rng, bound.x),
        y: state.y + uniform(rng, bound.y),
        theta: wrap_angle(state.theta + uniform(rng, bound.theta)),
        v: (state.v + uniform(rng, bound.v)).max(0.0),
        delta: state.delta + uniform(rng, bound.delta),
    }
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    /// Plant integration step, s.
    pub plant_dt: f64,
    /// Replanning rate, Hz.
    pub replan_hz: f64,
    pub disturbance: DisturbanceBound,
    pub disturbance_seed: u64,
    pub backend: Backend,
    /// Keep every planned trajectory in the log.
    pub keep_plans: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            plant_dt: 0.05,
            replan_hz: 20.0,
            disturbance: DisturbanceBound::default(),
            disturbance_seed: 0,
            backend: Backend::default(),
            keep_plans: false,
        }
    }
}

/// One plant tick: the state at `t`, the input held during the tick and the
/// obstacle clearance at `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRecord {
    pub t: f64,
    pub state: VehicleState,
    pub input: ControlInput,
    pub d_obj: f64,
    /// Compute time of the plan in force, ms.
    pub cycle_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Ran for the full duration.
    TimeUp,
    /// Reached the target point and stopped.
    Arrived,
    Collision,
    /// Too many consecutive planner faults.
    PlannerFault,
    /// Overtaking was expected but time ran out with an obstacle still
    /// ahead along the path.
    Blocked,
}

#[derive(Debug, Clone)]
pub struct SimulationLog {
    pub records: Vec<TickRecord>,
    /// Compute time of every successful planning cycle, ms.
    pub cycle_times_ms: Vec<f64>,
    pub faults: usize,
    pub outcome: Outcome,
    pub plans: Vec<(f64, PlannedTrajectory)>,
}

impl SimulationLog {
    pub fn collision(&self) -> bool {
        self.outcome == Outcome::Collision
    }

    pub fn completed(&self) -> bool {
        matches!(self.outcome, Outcome::TimeUp | Outcome::Arrived)
    }

    pub fn final_state(&self) -> Option<&VehicleState> {
        self.records.last().map(|r| &r.state)
    }
}

/// Whether any obstacle's centre is still ahead of the ego vehicle along the
/// reference path.
fn obstacle_ahead(scenario: &Scenario, state: &VehicleState, t: f64) -> bool {
    let ego = scenario.path.closest_index(state.position());
    scenario
        .obstacles
        .iter()
        .any(|o| scenario.path.closest_index(o.footprint_at(t).center) >= ego)
}

/// Runs `scenario` in closed loop with a fresh planner built from `config`.
pub fn run(scenario: &Scenario, config: &PlannerConfig, options: &SimOptions) -> Result<SimulationLog> {
    scenario.validate()?;
    options.disturbance.validate()?;
    if !(options.plant_dt > 0.0 && options.plant_dt.is_finite()) {
        return Err(Error::invalid("plant_dt", "must be positive"));
    }
    if !(options.replan_hz > 0.0 && options.replan_hz.is_finite()) {
        return Err(Error::invalid("hz", "must be positive"));
    }
    let period = 1.0 / options.replan_hz;
    let ticks_per_replan = (period / options.plant_dt).round() as usize;
    if ticks_per_replan == 0 || (ticks_per_replan as f64 * options.plant_dt - period).abs() > 1e-9 {
        return Err(Error::invalid(
            "plant_dt",
            format!("must divide the replanning period {period} s"),
        ));
    }

    let mut cfg = config.clone();
    cfg.weights.avoidance_gate = scenario.avoidance_gate;
    let planner_dt = cfg.dt();
    let horizon = cfg.horizon;
    let scene = Scene::new(scenario.obstacles.clone(), cfg.obstacle_margin)?;
    let plant = cfg.vehicle.with_dt(options.plant_dt);
    let target = scenario.path.target();
    let mut planner = Planner::with_backend(cfg, options.backend.clone())?;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(options.disturbance_seed);

    let ticks = (scenario.duration / options.plant_dt - 1e-9).ceil() as usize;
    let mut state = scenario.initial_state;
    let mut warm = InputSequence::zeros(horizon);
    let mut active: Option<(f64, PlannedTrajectory)> = None;
    let mut consecutive_faults = 0;
    let mut log = SimulationLog {
        records: Vec::with_capacity(ticks + 1),
        cycle_times_ms: Vec::new(),
        faults: 0,
        outcome: Outcome::TimeUp,
        plans: Vec::new(),
    };

    for tick in 0..=ticks {
        let t = tick as f64 * options.plant_dt;
        let d_obj = min_obstacle_distance(state.position(), &scene.circles_at(t));
        let last_input = log.records.last().map_or(ControlInput::ZERO, |r| r.input);
        let last_ms = log.records.last().map_or(0.0, |r| r.cycle_ms);
        let mut record = TickRecord {
            t,
            state,
            input: last_input,
            d_obj,
            cycle_ms: last_ms,
        };
        if d_obj <= 0.0 {
            log.records.push(record);
            log.outcome = Outcome::Collision;
            break;
        }
        let to_target = (state.x - target[0]).hypot(state.y - target[1]);
        if to_target <= ARRIVAL_RADIUS && state.v < ARRIVAL_SPEED {
            log.records.push(record);
            log.outcome = Outcome::Arrived;
            break;
        }
        if tick == ticks {
            if scenario.avoidance_gate && obstacle_ahead(scenario, &state, t) {
                log.outcome = Outcome::Blocked;
            }
            log.records.push(record);
            break;
        }

        if tick % ticks_per_replan == 0 {
            match planner.plan_cycle(&state, &scene, t, &scenario.path, &warm) {
                Ok((plan, next_warm)) => {
                    consecutive_faults = 0;
                    log.cycle_times_ms.push(plan.compute_time_ms);
                    warm = next_warm;
                    if options.keep_plans {
                        log.plans.push((t, plan.clone()));
                    }
                    active = Some((t, plan));
                }
                Err(Error::NonFiniteCost { .. }) => {
                    consecutive_faults += 1;
                    log.faults += 1;
                    if consecutive_faults >= MAX_CONSECUTIVE_FAULTS {
                        log.records.push(record);
                        log.outcome = Outcome::PlannerFault;
                        break;
                    }
                }
                Err(e) => return Err(e),
            }
        }

        let input = match &active {
            Some((planned_at, plan)) => {
                let k = ((t - planned_at) / planner_dt + 1e-9).floor() as usize;
                record.cycle_ms = plan.compute_time_ms;
                plan.inputs[k.min(plan.inputs.len() - 1)]
            }
            // no plan yet: coast
            None => ControlInput::ZERO,
        };
        record.input = input;
        log.records.push(record);

        state = step(&state, input, &plant);
        state = inject_disturbance(&state, &options.disturbance, &mut noise_rng);
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_bound_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = VehicleState::new(1.0, 2.0, 0.3, 4.0, 0.01);
        assert_eq!(inject_disturbance(&s, &DisturbanceBound::default(), &mut rng), s);
    }

    #[test]
    fn disturbance_stays_in_box_and_repeats() {
        let bound = DisturbanceBound {
            x: 0.05,
            y: 0.05,
            theta: 0.01,
            v: 0.1,
            delta: 0.0,
        };
        let s = VehicleState::new(1.0, 2.0, 0.3, 4.0, 0.01);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..200)
                .map(|_| inject_disturbance(&s, &bound, &mut rng))
                .collect::<Vec<_>>()
        };
        let a = draw(4);
        for d in &a {
            assert!((d.x - s.x).abs() <= 0.05 + 1e-12);
            assert!((d.y - s.y).abs() <= 0.05 + 1e-12);
            assert!((d.theta - s.theta).abs() <= 0.01 + 1e-12);
            assert!((d.v - s.v).abs() <= 0.1 + 1e-12);
            assert_eq!(d.delta, s.delta);
        }
        assert_eq!(a, draw(4));
        assert_ne!(a, draw(5));
    }
}
