use mppi::dynamics::{rollout, ControlInput, VehicleParams, VehicleState};

const WHEELBASE: f64 = 2.57;

/// Largest relative deviation from the analytic turning circle over a
/// quarter turn of constant steering.
fn circle_error(delta: f64, v: f64, dt: f64) -> f64 {
    let radius = WHEELBASE / delta.tan();
    let params = VehicleParams::new(WHEELBASE, 0.55, dt).unwrap();
    let quarter = std::f64::consts::FRAC_PI_2 * radius.abs() / v;
    let steps = (quarter / dt).round() as usize;
    let start = VehicleState::new(0.0, 0.0, 0.0, v, delta);
    let traj = rollout(&start, &vec![ControlInput::ZERO; steps], &params);
    // heading +x from the origin: centre at (0, r), r < 0 turning right
    traj.iter()
        .map(|s| ((s.x.powi(2) + (s.y - radius).powi(2)).sqrt() - radius.abs()).abs() / radius.abs())
        .fold(0.0, f64::max)
}

#[test]
fn constant_steer_traces_the_turning_circle() {
    // 2.57 / tan(0.2) = 12.678...
    assert!((WHEELBASE / 0.2f64.tan() - 12.678).abs() < 1e-3);
    let err = circle_error(0.2, 5.0, 0.001);
    assert!(err < 0.01, "relative radius error {err}");
}

#[test]
fn euler_error_is_first_order() {
    for (delta, v) in [(0.2, 5.0), (0.1, 8.0), (-0.3, 3.0)] {
        let coarse = circle_error(delta, v, 0.002);
        let fine = circle_error(delta, v, 0.001);
        assert!(coarse / fine >= 1.9, "delta {delta}: {coarse} / {fine}");
    }
}

#[test]
fn right_turn_mirrors_left_turn() {
    let params = VehicleParams::new(WHEELBASE, 0.55, 0.01).unwrap();
    let inputs = vec![ControlInput::new(0.3, 0.0); 300];
    let left = rollout(&VehicleState::new(0.0, 0.0, 0.0, 4.0, 0.15), &inputs, &params);
    let right = rollout(&VehicleState::new(0.0, 0.0, 0.0, 4.0, -0.15), &inputs, &params);
    for (l, r) in left.iter().zip(&right) {
        assert_eq!(l.x, r.x);
        assert_eq!(l.y, -r.y);
        assert_eq!(l.theta, -r.theta);
    }
}
