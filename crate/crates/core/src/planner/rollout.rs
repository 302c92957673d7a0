//! Rollout simulation and cost-to-go accumulation.

use crate::cost::{input_cost, running_state_cost, terminal_cost, CostWeights, InputCostParams};
use crate::dynamics::{step, ControlInput, VehicleParams, VehicleState};
use crate::error::{Error, Result};
use crate::parallel::Backend;
use crate::planner::noise::NoiseBatch;
use crate::scene::{CircleObstacle, ReferencePath, Scene};

/// Lowers the commanded acceleration so one step never ends above `v_goal`.
/// The result never drops below `a_min`.
#[inline]
pub fn enforce_speed_cap(v: f64, u: ControlInput, v_goal: f64, a_min: f64, dt: f64) -> ControlInput {
    if v + u.a * dt > v_goal {
        ControlInput::new(((v_goal - v) / dt).max(a_min), u.omega)
    } else {
        u
    }
}

/// Everything a rollout needs besides its own perturbations.
#[derive(Debug, Clone, Copy)]
pub struct RolloutContext<'a> {
    pub path: &'a ReferencePath,
    /// Obstacle circles at each horizon time `t0 + k * dt`, `k = 0..=T`.
    pub circles: &'a [Vec<CircleObstacle>],
    pub weights: &'a CostWeights,
    pub input_cost: &'a InputCostParams,
    pub vehicle: &'a VehicleParams,
    pub v_goal: f64,
    pub a_min: f64,
}

/// Obstacle circles at horizon times `t0 + k * dt` for `k = 0..=horizon`.
pub fn horizon_circles(scene: &Scene, t0: f64, dt: f64, horizon: usize) -> Vec<Vec<CircleObstacle>> {
    (0..=horizon)
        .map(|k| scene.circles_at(t0 + k as f64 * dt))
        .collect()
}

/// Cost-to-go of every rollout plus the perturbations actually executed.
#[derive(Debug, Clone)]
pub struct RolloutBatch {
    pub noise: NoiseBatch,
    pub costs: Vec<f64>,
}

impl RolloutBatch {
    pub fn min_cost(&self) -> f64 {
        self.costs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Re-simulates rollout `m`; identical to the trajectory that was scored.
    pub fn trajectory(
        &self,
        m: usize,
        initial: &VehicleState,
        nominal: &[ControlInput],
        vehicle: &VehicleParams,
    ) -> Vec<VehicleState> {
        let mut states = Vec::with_capacity(nominal.len() + 1);
        let mut x = *initial;
        states.push(x);
        for (u, e) in nominal.iter().zip(self.noise.row(m)) {
            x = step(&x, *u + *e, vehicle);
            states.push(x);
        }
        states
    }
}

/// Simulates one perturbed sequence, rewriting `eps` where the speed cap
/// reduced the acceleration, and returns its cost-to-go.
#[inline]
pub fn rollout_cost(
    initial: &VehicleState,
    nominal: &[ControlInput],
    eps: &mut [ControlInput],
    ctx: &RolloutContext<'_>,
) -> f64 {
    let dt = ctx.vehicle.dt;
    let with_input_cost = !ctx.input_cost.is_zero();
    let mut x = *initial;
    let mut total = 0.0;
    for (t, (u, e)) in nominal.iter().zip(eps.iter_mut()).enumerate() {
        let commanded = *u + *e;
        let capped = enforce_speed_cap(x.v, commanded, ctx.v_goal, ctx.a_min, dt);
        if capped.a != commanded.a {
            e.a = capped.a - u.a;
        }
        // step on u + eps so a replay from the stored noise is bit-identical
        let next = step(&x, *u + *e, ctx.vehicle);
        total += running_state_cost(&next, &x, &ctx.circles[t + 1], ctx.path, ctx.weights);
        if with_input_cost {
            total += input_cost(*u, *e, ctx.input_cost);
        }
        x = next;
    }
    total + terminal_cost(&x, ctx.path.target(), ctx.weights)
}

/// Scores every rollout. Each rollout is independent, so the result is the
/// same for every backend.
pub fn evaluate_rollouts(
    initial: &VehicleState,
    nominal: &[ControlInput],
    mut noise: NoiseBatch,
    ctx: &RolloutContext<'_>,
    backend: &Backend,
) -> Result<RolloutBatch> {
    assert_eq!(noise.horizon(), nominal.len(), "noise horizon mismatch");
    assert!(ctx.circles.len() > nominal.len(), "missing horizon circles");
    let horizon = noise.horizon();
    let mut costs = vec![0.0; noise.rollouts()];
    backend.for_each_row(noise.as_mut_slice(), horizon, &mut costs, |_, row, cost| {
        *cost = rollout_cost(initial, nominal, row, ctx);
    });
    if let Some(m) = costs.iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFiniteCost { rollout: m });
    }
    Ok(RolloutBatch { noise, costs })
}
