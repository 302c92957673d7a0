//! One MPPI planning cycle: sample perturbations, score rollouts, update the
//! nominal inputs, smooth them, rebuild the optimal states and shift the
//! sequence for the next cycle.

pub mod noise;
pub mod rollout;
pub mod smooth;
pub mod update;

use std::time::Instant;

use crate::config::PlannerConfig;
use crate::cost::{input_cost, running_state_cost, terminal_cost, CostWeights};
use crate::dynamics::{step, ControlInput, VehicleState};
use crate::error::{Error, Result};
use crate::parallel::Backend;
use crate::scene::{ReferencePath, Scene};

use noise::{sample_noise, NoiseScale, StreamKey};
use rollout::{enforce_speed_cap, evaluate_rollouts, horizon_circles, RolloutContext};
use smooth::smooth;
use update::update_inputs;

/// Nominal control sequence over the horizon.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InputSequence(Vec<ControlInput>);

impl InputSequence {
    pub fn zeros(horizon: usize) -> Self {
        Self(vec![ControlInput::ZERO; horizon])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[ControlInput] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<ControlInput> {
        self.0
    }

    /// Drops the first entry and repeats the last one.
    pub fn shifted(&self) -> Self {
        let mut next: Vec<ControlInput> = self.0.iter().skip(1).copied().collect();
        if let Some(last) = self.0.last() {
            next.push(*last);
        }
        Self(next)
    }
}

impl From<Vec<ControlInput>> for InputSequence {
    fn from(v: Vec<ControlInput>) -> Self {
        Self(v)
    }
}

impl std::ops::Deref for InputSequence {
    type Target = [ControlInput];

    fn deref(&self) -> &[ControlInput] {
        &self.0
    }
}

/// Optimal states and inputs of one cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedTrajectory {
    /// `T + 1` states; `states[t + 1] == step(states[t], inputs[t])`.
    pub states: Vec<VehicleState>,
    pub inputs: Vec<ControlInput>,
    /// Cost of the planned trajectory under the running and terminal costs.
    pub cycle_cost: f64,
    /// Lowest sampled rollout cost.
    pub min_rollout_cost: f64,
    pub compute_time_ms: f64,
}

/// Stateful planner: configuration, execution backend and cycle counter.
#[derive(Debug, Clone)]
pub struct Planner {
    config: PlannerConfig,
    backend: Backend,
    cycle: u64,
}

impl Planner {
    pub fn new(config: PlannerConfig) -> Result<Self> {
        Self::with_backend(config, Backend::default())
    }

    pub fn with_backend(config: PlannerConfig, backend: Backend) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            backend,
            cycle: 0,
        })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn reset(&mut self) {
        self.cycle = 0;
    }

    /// Runs one planning cycle from `state` at scene time `t0`.
    ///
    /// Returns the planned trajectory and the warm start for the next cycle.
    /// A non-finite rollout cost fails the cycle with
    /// [`Error::NonFiniteCost`]; the cycle counter advances either way.
    pub fn plan_cycle(
        &mut self,
        state: &VehicleState,
        scene: &Scene,
        t0: f64,
        path: &ReferencePath,
        warm: &InputSequence,
    ) -> Result<(PlannedTrajectory, InputSequence)> {
        let started = Instant::now();
        let cfg = &self.config;
        if warm.len() != cfg.horizon {
            return Err(Error::invalid(
                "warm",
                format!("expected {} entries, got {}", cfg.horizon, warm.len()),
            ));
        }
        if !state.is_finite() {
            return Err(Error::invalid("state", "must be finite"));
        }
        let key = StreamKey {
            seed: cfg.seed,
            cycle: self.cycle,
        };
        self.cycle += 1;

        let bounds = cfg.bounds();
        let nominal: Vec<ControlInput> = warm.iter().map(|u| bounds.clamp(*u)).collect();
        let scale = NoiseScale {
            sigma_a: cfg.sigma_a,
            sigma_omega: cfg.sigma_omega,
        };
        let noise = sample_noise(key, &nominal, scale, &bounds, cfg.rollouts, &self.backend)?;

        let circles = horizon_circles(scene, t0, cfg.dt(), cfg.horizon);
        let ctx = RolloutContext {
            path,
            circles: &circles,
            weights: &cfg.weights,
            input_cost: &cfg.input_cost,
            vehicle: &cfg.vehicle,
            v_goal: cfg.v_goal,
            a_min: cfg.a_min,
        };
        let batch = evaluate_rollouts(state, &nominal, noise, &ctx, &self.backend)?;

        let updated = update_inputs(&nominal, &batch, cfg.lambda, &bounds);
        let smoothed = smooth(&updated, &cfg.smoothing, &bounds);

        let mut states = Vec::with_capacity(cfg.horizon + 1);
        let mut inputs = Vec::with_capacity(cfg.horizon);
        let mut x = *state;
        states.push(x);
        for u in smoothed {
            let u = enforce_speed_cap(x.v, u, cfg.v_goal, cfg.a_min, cfg.dt());
            x = step(&x, u, &cfg.vehicle);
            inputs.push(u);
            states.push(x);
        }
        let cycle_cost = trajectory_cost(&states, &inputs, &ctx, &cfg.weights);
        let next_warm = InputSequence::from(inputs.clone()).shifted();

        let plan = PlannedTrajectory {
            states,
            inputs,
            cycle_cost,
            min_rollout_cost: batch.min_cost(),
            compute_time_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        Ok((plan, next_warm))
    }
}

fn trajectory_cost(
    states: &[VehicleState],
    inputs: &[ControlInput],
    ctx: &RolloutContext<'_>,
    weights: &CostWeights,
) -> f64 {
    let mut total = 0.0;
    for (t, u) in inputs.iter().enumerate() {
        total += running_state_cost(&states[t + 1], &states[t], &ctx.circles[t + 1], ctx.path, weights);
        total += input_cost(*u, ControlInput::ZERO, ctx.input_cost);
    }
    total + terminal_cost(states.last().expect("non-empty"), ctx.path.target(), weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_repeats_last() {
        let seq = InputSequence::from(vec![
            ControlInput::new(1.0, 0.0),
            ControlInput::new(2.0, 0.0),
            ControlInput::new(3.0, 0.0),
        ]);
        let next = seq.shifted();
        assert_eq!(
            next.as_slice(),
            &[
                ControlInput::new(2.0, 0.0),
                ControlInput::new(3.0, 0.0),
                ControlInput::new(3.0, 0.0)
            ]
        );
        let one = InputSequence::from(vec![ControlInput::new(1.0, 0.1)]);
        assert_eq!(one.shifted(), one);
    }

    #[test]
    fn rejects_wrong_warm_length() {
        let mut p = Planner::new(PlannerConfig {
            rollouts: 4,
            ..PlannerConfig::default()
        })
        .unwrap();
        let path = ReferencePath::from_points(&[[0.0, 0.0], [10.0, 0.0]], 5.0).unwrap();
        let r = p.plan_cycle(
            &VehicleState::default(),
            &Scene::empty(),
            0.0,
            &path,
            &InputSequence::zeros(3),
        );
        assert!(r.is_err());
    }
}
