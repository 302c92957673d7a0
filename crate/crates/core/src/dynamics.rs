//! Discrete-time kinematic bicycle model.
//!
//! The same `step` function drives planner rollouts and the simulated plant.
//! The reference point is the rear-axle centre, so the yaw rate is
//! `v * tan(delta) / wheelbase`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle into `[-pi, pi]`.
#[inline]
pub fn wrap_angle(angle: f64) -> f64 {
    if (-PI..=PI).contains(&angle) {
        return angle;
    }
    let wrapped = (angle + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2*pi for inputs just below a multiple of it
    if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    /// East position, m.
    pub x: f64,
    /// North position, m.
    pub y: f64,
    /// Yaw, rad, in `[-pi, pi]`.
    pub theta: f64,
    /// Longitudinal speed, m/s, never negative.
    pub v: f64,
    /// Steering angle, rad.
    pub delta: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, theta: f64, v: f64, delta: f64) -> Self {
        Self {
            x,
            y,
            theta,
            v,
            delta,
        }
    }

    #[inline]
    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.theta.is_finite()
            && self.v.is_finite()
            && self.delta.is_finite()
    }
}

/// Longitudinal acceleration (m/s²) and steering rate (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub a: f64,
    pub omega: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput { a: 0.0, omega: 0.0 };

    pub fn new(a: f64, omega: f64) -> Self {
        Self { a, omega }
    }
}

impl std::ops::Add for ControlInput {
    type Output = ControlInput;

    fn add(self, rhs: Self) -> Self {
        ControlInput::new(self.a + rhs.a, self.omega + rhs.omega)
    }
}

impl std::ops::Sub for ControlInput {
    type Output = ControlInput;

    fn sub(self, rhs: Self) -> Self {
        ControlInput::new(self.a - rhs.a, self.omega - rhs.omega)
    }
}

/// Box constraints on the control input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputBounds {
    pub a_min: f64,
    pub a_max: f64,
    pub omega_max: f64,
}

impl InputBounds {
    #[inline]
    pub fn clamp(&self, u: ControlInput) -> ControlInput {
        ControlInput {
            a: u.a.clamp(self.a_min, self.a_max),
            omega: u.omega.clamp(-self.omega_max, self.omega_max),
        }
    }

    pub fn contains(&self, u: ControlInput) -> bool {
        u.a >= self.a_min && u.a <= self.a_max && u.omega.abs() <= self.omega_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Wheelbase, m.
    pub wheelbase: f64,
    /// Steering angle bound, rad.
    pub delta_max: f64,
    /// Integration step, s.
    pub dt: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 2.57,
            delta_max: 0.55,
            dt: 0.25,
        }
    }
}

impl VehicleParams {
    pub fn new(wheelbase: f64, delta_max: f64, dt: f64) -> Result<Self> {
        let params = Self {
            wheelbase,
            delta_max,
            dt,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wheelbase > 0.0 && self.wheelbase.is_finite()) {
            return Err(Error::invalid("wheelbase", "must be positive"));
        }
        if !(self.delta_max > 0.0 && self.delta_max < PI / 2.0) {
            return Err(Error::invalid("delta_max", "must lie in (0, pi/2)"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        Ok(())
    }

    pub fn with_dt(self, dt: f64) -> Self {
        Self { dt, ..self }
    }
}

/// One explicit Euler step of the bicycle model.
///
/// The right-hand side uses the pre-step `v`, `theta` and `delta`. Speed is
/// clamped at zero and steering at `delta_max`.
#[inline]
pub fn step(state: &VehicleState, input: ControlInput, params: &VehicleParams) -> VehicleState {
    let dt = params.dt;
    let (sin, cos) = state.theta.sin_cos();
    VehicleState {
        x: state.x + state.v * cos * dt,
        y: state.y + state.v * sin * dt,
        theta: wrap_angle(state.theta + state.v * state.delta.tan() / params.wheelbase * dt),
        v: (state.v + input.a * dt).max(0.0),
        delta: (state.delta + input.omega * dt).clamp(-params.delta_max, params.delta_max),
    }
}

/// `T + 1` states, the first being the initial state.
pub type StateTrajectory = Vec<VehicleState>;

pub fn rollout(
    initial: &VehicleState,
    inputs: &[ControlInput],
    params: &VehicleParams,
) -> StateTrajectory {
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(*initial);
    let mut current = *initial;
    for &u in inputs {
        current = step(&current, u, params);
        states.push(current);
    }
    states
}
