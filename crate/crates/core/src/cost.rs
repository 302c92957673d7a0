//! Running, input and terminal costs.
//!
//! The state cost is the weighted sum of five terms: squared distance to the
//! closest waypoint, a no-progress indicator, squared yaw error, squared
//! speed error and a speed-dependent safe-distance penalty.

use serde::{Deserialize, Serialize};

use crate::dynamics::{wrap_angle, ControlInput, VehicleState};
use crate::error::{Error, Result};
use crate::scene::{min_obstacle_distance, CircleObstacle, ReferencePath};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub w_dist: f64,
    pub w_target: f64,
    pub w_yaw: f64,
    pub w_speed: f64,
    pub w_safe: f64,
    pub w_terminal: f64,
    /// Safe distance per unit speed, s.
    pub d_safe_c: f64,
    /// Minimum safe distance, m.
    pub d_safe_0: f64,
    /// Only penalise the safe distance when a collision occurs.
    pub avoidance_gate: bool,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            w_dist: 15.0,
            w_target: 7.0,
            w_yaw: 120.0,
            w_speed: 5.0,
            w_safe: 25.0,
            w_terminal: 0.0,
            d_safe_c: 1.36,
            d_safe_0: 11.0,
            avoidance_gate: false,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("w_dist", self.w_dist),
            ("w_target", self.w_target),
            ("w_yaw", self.w_yaw),
            ("w_speed", self.w_speed),
            ("w_safe", self.w_safe),
            ("w_terminal", self.w_terminal),
            ("d_safe_c", self.d_safe_c),
            ("d_safe_0", self.d_safe_0),
        ];
        for (key, value) in fields {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::invalid(key, "must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

/// Quadratic input cost parameters: weight matrix `r` and exploration
/// hyperparameter `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputCostParams {
    pub r: [[f64; 2]; 2],
    pub gamma: f64,
}

impl Default for InputCostParams {
    fn default() -> Self {
        Self {
            r: [[0.0; 2]; 2],
            gamma: 1.0,
        }
    }
}

impl InputCostParams {
    pub fn alpha(&self) -> f64 {
        (self.gamma - 1.0) / (2.0 * self.gamma)
    }

    pub fn is_zero(&self) -> bool {
        self.r.iter().flatten().all(|&v| v == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let [[a, b], [c, d]] = self.r;
        if ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("R", "entries must be finite"));
        }
        if b != c {
            return Err(Error::invalid("R", "must be symmetric"));
        }
        // 2x2 symmetric PSD: non-negative diagonal and determinant
        if a < 0.0 || d < 0.0 || a * d - b * c < -1e-12 * (a * d).abs().max(1.0) {
            return Err(Error::invalid("R", "must be positive semi-definite"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma", "must be positive"));
        }
        Ok(())
    }
}

/// Squared distance to the closest waypoint.
pub fn c_dist(p: [f64; 2], path: &ReferencePath) -> f64 {
    let w = path.closest_waypoint(p);
    sq_dist(p, [w.x, w.y])
}

/// 1 when `p` is strictly farther from the target than `p_prev`.
#[inline]
pub fn c_target(p: [f64; 2], p_prev: [f64; 2], target: [f64; 2]) -> f64 {
    if sq_dist(p, target) > sq_dist(p_prev, target) {
        1.0
    } else {
        0.0
    }
}

#[inline]
pub fn c_yaw(theta: f64, theta_ref: f64) -> f64 {
    let e = wrap_angle(theta - theta_ref);
    e * e
}

#[inline]
pub fn c_speed(v: f64, v_ref: f64) -> f64 {
    let e = v - v_ref;
    e * e
}

/// Desired clearance at speed `v`.
#[inline]
pub fn safe_distance(v: f64, weights: &CostWeights) -> f64 {
    weights.d_safe_c * v + weights.d_safe_0
}

/// Safe-distance penalty given a precomputed clearance `d_obj`.
#[inline]
pub fn safe_dist_penalty(d_obj: f64, v: f64, weights: &CostWeights) -> f64 {
    if weights.avoidance_gate && d_obj > 0.0 {
        return 0.0;
    }
    let shortfall = (safe_distance(v, weights) - d_obj).max(0.0);
    shortfall * shortfall
}

pub fn c_safe_dist(p: [f64; 2], v: f64, circles: &[CircleObstacle], weights: &CostWeights) -> f64 {
    safe_dist_penalty(min_obstacle_distance(p, circles), v, weights)
}

/// The five unweighted state-cost terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostTerms {
    pub dist: f64,
    pub target: f64,
    pub yaw: f64,
    pub speed: f64,
    pub safe_dist: f64,
}

impl CostTerms {
    pub fn evaluate(
        state: &VehicleState,
        prev: &VehicleState,
        circles: &[CircleObstacle],
        path: &ReferencePath,
        weights: &CostWeights,
    ) -> Self {
        let p = state.position();
        let w = path.closest_waypoint(p);
        CostTerms {
            dist: sq_dist(p, [w.x, w.y]),
            target: c_target(p, prev.position(), path.target()),
            yaw: c_yaw(state.theta, w.yaw),
            speed: c_speed(state.v, w.speed),
            safe_dist: c_safe_dist(p, state.v, circles, weights),
        }
    }

    #[inline]
    pub fn weighted(&self, weights: &CostWeights) -> f64 {
        weights.w_dist * self.dist
            + weights.w_target * self.target
            + weights.w_yaw * self.yaw
            + weights.w_speed * self.speed
            + weights.w_safe * self.safe_dist
    }
}

/// Weighted state cost of `state`, reached from `prev`. `circles` are the
/// obstacles predicted at the state's time.
#[inline]
pub fn running_state_cost(
    state: &VehicleState,
    prev: &VehicleState,
    circles: &[CircleObstacle],
    path: &ReferencePath,
    weights: &CostWeights,
) -> f64 {
    CostTerms::evaluate(state, prev, circles, path, weights).weighted(weights)
}

/// `alpha * eps' R u + u' R eps + 0.5 * u' R u`.
#[inline]
pub fn input_cost(u: ControlInput, eps: ControlInput, params: &InputCostParams) -> f64 {
    let quad = |x: [f64; 2], y: [f64; 2]| {
        let r = &params.r;
        x[0] * (r[0][0] * y[0] + r[0][1] * y[1]) + x[1] * (r[1][0] * y[0] + r[1][1] * y[1])
    };
    let u = [u.a, u.omega];
    let e = [eps.a, eps.omega];
    params.alpha() * quad(e, u) + quad(u, e) + 0.5 * quad(u, u)
}

pub fn terminal_cost(state: &VehicleState, target: [f64; 2], weights: &CostWeights) -> f64 {
    if weights.w_terminal == 0.0 {
        return 0.0;
    }
    weights.w_terminal * sq_dist(state.position(), target)
}

#[inline]
fn sq_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{ReferencePath, Waypoint};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn straight_path() -> ReferencePath {
        let pts: Vec<[f64; 2]> = (0..=100).map(|i| [i as f64, 0.0]).collect();
        ReferencePath::from_points(&pts, 8.333).unwrap()
    }

    #[test]
    fn dist_term() {
        let path = straight_path();
        assert_eq!(c_dist([4.0, 0.0], &path), 0.0);
        assert_eq!(c_dist([4.0, 2.0], &path), 4.0);
    }

    #[test]
    fn dist_matches_scan() {
        let pts: Vec<[f64; 2]> = (0..60)
            .map(|i| [i as f64 * 1.3, (i as f64 * 0.2).sin() * 5.0])
            .collect();
        let path = ReferencePath::from_points(&pts, 3.0).unwrap();
        for k in 0..200 {
            let p = [(k as f64 * 0.37) % 80.0, ((k * 7) as f64 * 0.11) % 12.0 - 6.0];
            let brute = path
                .waypoints()
                .iter()
                .map(|w| (p[0] - w.x).powi(2) + (p[1] - w.y).powi(2))
                .fold(f64::INFINITY, f64::min);
            assert_relative_eq!(c_dist(p, &path), brute, max_relative = 1e-12);
        }
    }

    #[test]
    fn target_term() {
        let target = [100.0, 0.0];
        assert_eq!(c_target([10.0, 0.0], [9.0, 0.0], target), 0.0);
        assert_eq!(c_target([9.0, 0.0], [10.0, 0.0], target), 1.0);
        assert_eq!(c_target([10.0, 1.0], [10.0, -1.0], target), 0.0);
    }

    #[test]
    fn yaw_term() {
        assert_eq!(c_yaw(0.7, 0.7), 0.0);
        // 6 - 2*pi = -0.28318530717958623
        assert_relative_eq!(c_yaw(3.0, -3.0), 0.080_193_918_2, epsilon = 1e-9);
        assert_relative_eq!(c_yaw(PI, -PI), 0.0, epsilon = 1e-24);
    }

    #[test]
    fn speed_term() {
        assert_eq!(c_speed(8.333, 8.333), 0.0);
        assert_relative_eq!(c_speed(5.0, 8.333), 3.333f64 * 3.333, epsilon = 1e-12);
        assert_relative_eq!(c_speed(5.0, 25.0 / 3.0), 100.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn safe_distance_term() {
        let w = CostWeights::default();
        assert_eq!(c_safe_dist([0.0, 0.0], 8.0, &[], &w), 0.0);
        // d_safe = 1.36 * 8.333 + 11 = 22.33288
        let circle = CircleObstacle {
            cx: 11.0,
            cy: 0.0,
            radius: 1.0,
        };
        let cost = c_safe_dist([0.0, 0.0], 8.333, &[circle], &w);
        assert_relative_eq!(cost, 12.33288f64.powi(2), epsilon = 1e-9);
        assert_relative_eq!(cost, 152.10, epsilon = 0.01);

        let gated = CostWeights {
            avoidance_gate: true,
            ..w
        };
        let near = CircleObstacle {
            cx: 1.5,
            cy: 0.0,
            radius: 1.0,
        };
        assert_eq!(c_safe_dist([0.0, 0.0], 8.333, &[near], &gated), 0.0);
        let inside = CircleObstacle {
            cx: 0.5,
            cy: 0.0,
            radius: 1.0,
        };
        assert_relative_eq!(
            c_safe_dist([0.0, 0.0], 0.0, &[inside], &gated),
            11.5f64.powi(2),
            epsilon = 1e-9
        );
    }

    #[test]
    fn running_cost_single_terms() {
        let path = straight_path();
        let w = CostWeights::default();
        let prev = VehicleState::new(9.0, 0.0, 0.0, 8.333, 0.0);
        let on = VehicleState::new(10.0, 0.0, 0.0, 8.333, 0.0);
        assert_eq!(running_state_cost(&on, &prev, &[], &path, &w), 0.0);
        let offset = VehicleState::new(10.0, 2.0, 0.0, 8.333, 0.0);
        let prev_off = VehicleState::new(9.0, 2.0, 0.0, 8.333, 0.0);
        assert_relative_eq!(
            running_state_cost(&offset, &prev_off, &[], &path, &w),
            60.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn input_cost_cases() {
        let zero = InputCostParams::default();
        assert_eq!(
            input_cost(ControlInput::new(1.0, 2.0), ControlInput::new(3.0, 4.0), &zero),
            0.0
        );
        let ident = InputCostParams {
            r: [[1.0, 0.0], [0.0, 1.0]],
            gamma: 1.0,
        };
        assert_eq!(input_cost(ControlInput::ZERO, ControlInput::new(3.0, -4.0), &ident), 0.0);
        assert_relative_eq!(
            input_cost(ControlInput::new(1.0, 2.0), ControlInput::new(0.5, -0.5), &ident),
            2.0,
            epsilon = 1e-15
        );
        // gamma = 2 -> alpha = 1/4: 0.25 * (-0.5) + (-0.5) + 2.5
        let explore = InputCostParams { gamma: 2.0, ..ident };
        assert_relative_eq!(
            input_cost(ControlInput::new(1.0, 2.0), ControlInput::new(0.5, -0.5), &explore),
            1.875,
            epsilon = 1e-15
        );
    }

    #[test]
    fn input_params_validation() {
        let bad = InputCostParams {
            r: [[1.0, 2.0], [2.0, 1.0]],
            gamma: 1.0,
        };
        assert!(bad.validate().is_err());
        let asym = InputCostParams {
            r: [[1.0, 0.1], [0.0, 1.0]],
            gamma: 1.0,
        };
        assert!(asym.validate().is_err());
        let zero_gamma = InputCostParams {
            gamma: 0.0,
            ..InputCostParams::default()
        };
        assert!(zero_gamma.validate().is_err());
        assert!(InputCostParams::default().validate().is_ok());
    }

    #[test]
    fn terminal() {
        let w = CostWeights {
            w_terminal: 1.0,
            ..CostWeights::default()
        };
        let s = VehicleState::new(3.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(terminal_cost(&s, [3.0, 0.0], &w), 0.0);
        assert_eq!(terminal_cost(&s, [0.0, 0.0], &w), 9.0);
        assert_eq!(terminal_cost(&s, [0.0, 0.0], &CostWeights::default()), 0.0);
    }

    #[test]
    fn rejects_negative_weights() {
        let w = CostWeights {
            w_yaw: -1.0,
            ..CostWeights::default()
        };
        assert!(w.validate().is_err());
    }

    proptest! {
        #[test]
        fn yaw_symmetric_and_periodic(a in -10.0..10.0f64, b in -10.0..10.0f64) {
            prop_assert!((c_yaw(a, b) - c_yaw(b, a)).abs() < 1e-12);
            prop_assert!((c_yaw(a + 2.0 * PI, b) - c_yaw(a, b)).abs() < 1e-9);
            prop_assert!(c_yaw(a, b) <= PI * PI + 1e-12);
        }

        #[test]
        fn gate_zero_without_collision(d in 1e-9..50.0f64, v in 0.0..10.0f64) {
            let w = CostWeights { avoidance_gate: true, ..CostWeights::default() };
            prop_assert_eq!(safe_dist_penalty(d, v, &w), 0.0);
        }

        #[test]
        fn safe_cost_increases_with_speed(d in -5.0..11.0f64, v in 0.0..10.0f64, dv in 1e-3..5.0f64) {
            let w = CostWeights::default();
            prop_assert!(safe_dist_penalty(d, v + dv, &w) > safe_dist_penalty(d, v, &w));
        }

        #[test]
        fn total_is_weighted_sum_and_nonnegative(
            x in -20.0..120.0f64, y in -10.0..10.0f64, theta in -PI..PI, v in 0.0..12.0f64,
            px in -20.0..120.0f64, py in -10.0..10.0f64,
            ox in 0.0..100.0f64, oy in -5.0..5.0f64, gate in any::<bool>(),
        ) {
            let path = straight_path();
            let w = CostWeights { avoidance_gate: gate, ..CostWeights::default() };
            let s = VehicleState::new(x, y, theta, v, 0.0);
            let prev = VehicleState::new(px, py, 0.0, v, 0.0);
            let circles = [CircleObstacle { cx: ox, cy: oy, radius: 1.2 }];
            let total = running_state_cost(&s, &prev, &circles, &path, &w);
            let p = s.position();
            let wp = path.closest_waypoint(p);
            let oracle = w.w_dist * c_dist(p, &path)
                + w.w_target * c_target(p, prev.position(), path.target())
                + w.w_yaw * c_yaw(theta, wp.yaw)
                + w.w_speed * c_speed(v, wp.speed)
                + w.w_safe * c_safe_dist(p, v, &circles, &w);
            prop_assert!(total >= 0.0);
            prop_assert!((total - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
        }
    }

    #[test]
    fn waypoint_reference_values_are_used() {
        let wps = vec![
            Waypoint { x: 0.0, y: 0.0, yaw: 0.5, speed: 3.0 },
            Waypoint { x: 10.0, y: 0.0, yaw: -0.5, speed: 6.0 },
        ];
        let path = ReferencePath::new(wps, [20.0, 0.0]).unwrap();
        let w = CostWeights::default();
        let terms = CostTerms::evaluate(
            &VehicleState::new(9.0, 0.0, 0.0, 6.0, 0.0),
            &VehicleState::new(8.0, 0.0, 0.0, 6.0, 0.0),
            &[],
            &path,
            &w,
        );
        assert_eq!(terms.dist, 1.0);
        assert_eq!(terms.yaw, 0.25);
        assert_eq!(terms.speed, 0.0);
        assert_eq!(terms.target, 0.0);
    }
}
